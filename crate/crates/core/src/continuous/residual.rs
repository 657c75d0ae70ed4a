//! Optimal split of a residual capacity when some tasks are pinned to share 1.
//!
//! Every subtree is viewed as a convex, decreasing cost curve `T(y)`: the
//! best achievable cost of its costliest path when it receives capacity `y`.
//!
//! * a subtree whose tasks are all pinned is a constant `K`;
//! * a subtree without pinned tasks is `W / y`, with `W` from the unit-capacity
//!   weight annotation;
//! * anything else is *mixed*: it approaches a floor (its pinned-only path
//!   cost) and may reach that floor at a finite capacity (saturation).
//!
//! Serial children are balanced at a common slope `s = -T'(y)`, parallel
//! children at a common level `T`. Each mixed node answers queries in both
//! parametrizations; the one that does not match its composition is found by
//! a safeguarded Newton iteration in log space.

use std::collections::{BTreeMap, BTreeSet};

use super::{compute_weights, solve as solve_free};
use crate::spd::{Op, SpdTree};

pub(super) fn solve(tree: &SpdTree, fixed: &BTreeSet<String>, capacity: f64) -> BTreeMap<String, f64> {
    let mut arena = Arena { nodes: Vec::new() };
    let root = arena.build(tree, fixed);
    let mut shares: BTreeMap<String, f64> = fixed.iter().map(|id| (id.clone(), 1.0)).collect();
    match root {
        Class::Fixed(_) => {}
        Class::Pure(w) => {
            debug_assert!(w > 0.0);
            shares.extend(solve_free(tree, capacity).expect("positive capacity").shares);
        }
        Class::Mixed(i) => {
            let mut free = BTreeMap::new();
            let scale = match arena.nodes[i].sat {
                Some(sat) if capacity >= sat.y => {
                    // more capacity than the pinned floor can use: every free
                    // share gets the same relative surplus
                    let p = arena.saturation_point(i, sat.slope);
                    arena.distribute(i, p, &mut free);
                    capacity / sat.y
                }
                _ => {
                    let p = arena.at_capacity(i, capacity);
                    arena.distribute(i, p, &mut free);
                    1.0
                }
            };
            shares.extend(free.into_iter().map(|(id, x)| (id, x * scale)));
        }
    }
    shares
}

#[derive(Debug, Clone, Copy)]
enum Class {
    Fixed(f64),
    Pure(f64),
    Mixed(usize),
}

#[derive(Debug, Clone, Copy)]
struct Saturation {
    /// Smallest capacity at which the node reaches its floor.
    y: f64,
    /// Left slope at that capacity.
    slope: f64,
}

/// A point on a node's cost curve with `dyds = dy/ds`.
#[derive(Debug, Clone, Copy)]
struct Point {
    y: f64,
    t: f64,
    s: f64,
    dyds: f64,
}

fn pure_at_slope(w: f64, s: f64) -> Point {
    let y = (w / s).sqrt();
    Point { y, t: (w * s).sqrt(), s, dyds: -y / (2.0 * s) }
}

fn pure_at_level(w: f64, t: f64) -> Point {
    let y = w / t;
    let s = t * t / w;
    Point { y, t, s, dyds: -y / (2.0 * s) }
}

enum Child<'t> {
    Fixed,
    Pure(&'t SpdTree, f64),
    Mixed(usize),
}

struct Node<'t> {
    op: Op,
    children: Vec<Child<'t>>,
    /// Serial: sum of pinned child costs. Parallel: their maximum.
    konst: f64,
    /// Weight of the pure children merged into one.
    pure_w: f64,
    /// Unit-capacity weight of the free tasks alone; only used for initial guesses.
    w_free: f64,
    floor: f64,
    sat: Option<Saturation>,
}

struct Arena<'t> {
    nodes: Vec<Node<'t>>,
}

impl<'t> Arena<'t> {
    fn build(&mut self, tree: &'t SpdTree, fixed: &BTreeSet<String>) -> Class {
        let inner = match tree {
            SpdTree::Leaf(l) if fixed.contains(l.id()) => return Class::Fixed(l.weight()),
            SpdTree::Leaf(l) => return Class::Pure(l.weight()),
            SpdTree::Inner(inner) => inner,
        };
        let op = inner.op();
        let classes: Vec<Class> = inner.children().iter().map(|c| self.build(c, fixed)).collect();
        let agg = |xs: &mut dyn Iterator<Item = f64>| match op {
            Op::Serial => xs.sum::<f64>(),
            Op::Parallel => xs.fold(0.0, f64::max),
        };
        let konst = agg(&mut classes.iter().filter_map(|c| match c {
            Class::Fixed(k) => Some(*k),
            _ => None,
        }));
        let pure_ws: Vec<f64> = classes
            .iter()
            .filter_map(|c| match c {
                Class::Pure(w) => Some(*w),
                _ => None,
            })
            .collect();
        let has_mixed = classes.iter().any(|c| matches!(c, Class::Mixed(_)));
        let has_fixed = classes.iter().any(|c| matches!(c, Class::Fixed(_)));
        if !has_mixed && pure_ws.is_empty() {
            return Class::Fixed(konst);
        }
        if !has_mixed && !has_fixed {
            return Class::Pure(super::combine(op, pure_ws.into_iter()));
        }
        let pure_w = if pure_ws.is_empty() { 0.0 } else { super::combine(op, pure_ws.iter().copied()) };
        let mut w_free_parts = pure_ws.clone();
        let mut children = Vec::with_capacity(classes.len());
        for (c, class) in inner.children().iter().zip(&classes) {
            children.push(match *class {
                Class::Fixed(_) => Child::Fixed,
                Class::Pure(w) => Child::Pure(c, w),
                Class::Mixed(i) => {
                    w_free_parts.push(self.nodes[i].w_free);
                    Child::Mixed(i)
                }
            });
        }
        let w_free = super::combine(op, w_free_parts.into_iter());
        let mixed_floors: Vec<f64> = classes
            .iter()
            .filter_map(|c| match c {
                Class::Mixed(i) => Some(self.nodes[*i].floor),
                _ => None,
            })
            .collect();
        let floor = match op {
            Op::Serial => konst + mixed_floors.iter().sum::<f64>(),
            Op::Parallel => mixed_floors.iter().copied().fold(konst, f64::max),
        };
        let id = self.nodes.len();
        self.nodes.push(Node { op, children, konst, pure_w, w_free, floor, sat: None });
        self.nodes[id].sat = self.saturation(id);
        Class::Mixed(id)
    }

    fn mixed_children(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes[i].children.iter().filter_map(|c| match c {
            Child::Mixed(j) => Some(*j),
            _ => None,
        })
    }

    fn saturation(&self, i: usize) -> Option<Saturation> {
        let node = &self.nodes[i];
        match node.op {
            Op::Serial => {
                if node.pure_w > 0.0 {
                    return None;
                }
                let mut sat = Saturation { y: 0.0, slope: f64::INFINITY };
                for j in self.mixed_children(i) {
                    let s = self.nodes[j].sat?;
                    sat.y += s.y;
                    sat.slope = sat.slope.min(s.slope);
                }
                Some(sat)
            }
            Op::Parallel => {
                let floor = node.floor;
                let mut y = 0.0;
                let mut inv_slope = 0.0;
                for j in self.mixed_children(i) {
                    let child = &self.nodes[j];
                    if child.floor >= floor {
                        let s = child.sat?;
                        y += s.y;
                        inv_slope += 1.0 / s.slope;
                    } else {
                        let p = self.at_level(j, floor);
                        y += p.y;
                        inv_slope += 1.0 / p.s;
                    }
                }
                if node.pure_w > 0.0 {
                    let p = pure_at_level(node.pure_w, floor);
                    y += p.y;
                    inv_slope += 1.0 / p.s;
                }
                Some(Saturation { y, slope: 1.0 / inv_slope })
            }
        }
    }

    fn saturation_point(&self, i: usize, s: f64) -> Point {
        let node = &self.nodes[i];
        let sat = node.sat.expect("saturable node");
        Point { y: sat.y, t: node.floor, s, dyds: 0.0 }
    }

    fn at_slope(&self, i: usize, s: f64) -> Point {
        let node = &self.nodes[i];
        if let Some(sat) = node.sat {
            if s <= sat.slope {
                return self.saturation_point(i, s);
            }
        }
        match node.op {
            Op::Serial => self.serial_at_slope(i, s),
            Op::Parallel => {
                let floor = node.floor;
                let target = s;
                let v0 = (s * node.w_free).sqrt().ln();
                solve_increasing(
                    |v| {
                        let t = floor + v.exp();
                        let p = self.parallel_at_level(i, t);
                        (p.s, (t - floor) * dsdt(p), p)
                    },
                    target,
                    v0,
                    None,
                )
            }
        }
    }

    fn at_level(&self, i: usize, t: f64) -> Point {
        let node = &self.nodes[i];
        if t <= node.floor {
            match node.sat {
                Some(sat) => return self.saturation_point(i, sat.slope),
                // only reachable through rounding just above a non-saturable floor
                None => return self.at_level(i, node.floor * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE),
            }
        }
        match node.op {
            Op::Parallel => self.parallel_at_level(i, t),
            Op::Serial => {
                let gap = t - node.floor;
                let u0 = (gap * gap / node.w_free).ln();
                let lo = node.sat.map(|sat| sat.slope.ln());
                solve_increasing(
                    |u| {
                        let p = self.serial_at_slope(i, u.exp());
                        (p.t, -p.s * p.s * p.dyds, p)
                    },
                    t,
                    u0,
                    lo,
                )
            }
        }
    }

    fn serial_at_slope(&self, i: usize, s: f64) -> Point {
        let node = &self.nodes[i];
        let mut p = Point { y: 0.0, t: node.konst, s, dyds: 0.0 };
        if node.pure_w > 0.0 {
            let q = pure_at_slope(node.pure_w, s);
            p.y += q.y;
            p.t += q.t;
            p.dyds += q.dyds;
        }
        for j in self.mixed_children(i) {
            let q = self.at_slope(j, s);
            p.y += q.y;
            p.t += q.t;
            p.dyds += q.dyds;
        }
        p
    }

    /// Requires `t` strictly above the node's floor.
    fn parallel_at_level(&self, i: usize, t: f64) -> Point {
        let node = &self.nodes[i];
        let mut parts: Vec<Point> = self.mixed_children(i).map(|j| self.at_level(j, t)).collect();
        if node.pure_w > 0.0 {
            parts.push(pure_at_level(node.pure_w, t));
        }
        let y: f64 = parts.iter().map(|p| p.y).sum();
        let s = 1.0 / parts.iter().map(|p| 1.0 / p.s).sum::<f64>();
        // ds/dt = s² Σ 1 / (-s_i³ dy_i/ds_i)
        let dsdt = s * s * parts.iter().map(|p| 1.0 / (-p.s.powi(3) * p.dyds)).sum::<f64>();
        Point { y, t, s, dyds: (-1.0 / s) / dsdt }
    }

    /// The point on the root curve with capacity `y`; the root must not saturate below `y`.
    fn at_capacity(&self, i: usize, y: f64) -> Point {
        let node = &self.nodes[i];
        match node.op {
            // y grows as the slope falls: solve in x = -ln s
            Op::Serial => {
                let x0 = -(node.w_free / (y * y)).ln();
                solve_increasing(
                    |x| {
                        let s = (-x).exp();
                        let p = self.at_slope(i, s);
                        (p.y, -p.dyds * s, p)
                    },
                    y,
                    x0,
                    None,
                )
            }
            // y grows as the level falls: solve in x = -ln(t - floor)
            Op::Parallel => {
                let floor = node.floor;
                let x0 = -(node.w_free / y).ln();
                solve_increasing(
                    |x| {
                        let gap = (-x).exp();
                        let p = self.parallel_at_level(i, floor + gap);
                        (p.y, gap / p.s, p)
                    },
                    y,
                    x0,
                    None,
                )
            }
        }
    }

    fn distribute(&self, i: usize, p: Point, shares: &mut BTreeMap<String, f64>) {
        let node = &self.nodes[i];
        for child in &node.children {
            match *child {
                Child::Fixed => {}
                Child::Pure(z, w) => {
                    let y = match node.op {
                        Op::Serial => pure_at_slope(w, p.s).y,
                        Op::Parallel => pure_at_level(w, p.t).y,
                    };
                    debug_assert_eq!(compute_weights(z).weight, w);
                    shares.extend(solve_free(z, y).expect("positive capacity").shares);
                }
                Child::Mixed(j) => {
                    let q = match node.op {
                        Op::Serial => self.at_slope(j, p.s),
                        Op::Parallel => self.at_level(j, p.t),
                    };
                    self.distribute(j, q, shares);
                }
            }
        }
    }
}

fn dsdt(p: Point) -> f64 {
    // dt/ds = -s·dy/ds along any cost curve
    1.0 / (-p.s * p.dyds)
}

/// Solves `g(x) = target` for a nondecreasing `g` given as `x -> (g, g', payload)`.
///
/// `lo`, when given, is a point known to satisfy `g(lo) <= target`.
fn solve_increasing<P: Copy>(
    mut f: impl FnMut(f64) -> (f64, f64, P),
    target: f64,
    x0: f64,
    lo: Option<f64>,
) -> P {
    const MAX_ITER: usize = 200;
    let tol = 1e-14 * target.abs();
    let x0 = if x0.is_finite() { x0 } else { 0.0 };
    let (g0, d0, p0) = f(x0);
    let mut best = (g0 - target, p0);
    let note = |r: f64, p: P, best: &mut (f64, P)| {
        if r.abs() < best.0.abs() {
            *best = (r, p);
        }
    };
    if (g0 - target).abs() <= tol {
        return p0;
    }

    // bracket: g(a) <= target <= g(b)
    let (mut a, mut ga, mut da, mut b, mut gb, mut db);
    if g0 < target {
        (a, ga, da) = (x0, g0, d0);
        let mut step = 1.0;
        loop {
            let x = a + step;
            let (g, d, p) = f(x);
            note(g - target, p, &mut best);
            if g >= target {
                (b, gb, db) = (x, g, d);
                break;
            }
            (a, ga, da) = (x, g, d);
            step *= 2.0;
            if step > 1e6 {
                return best.1;
            }
        }
    } else {
        (b, gb, db) = (x0, g0, d0);
        match lo {
            Some(l) if l < x0 => {
                let (g, d, p) = f(l);
                note(g - target, p, &mut best);
                (a, ga, da) = (l, g, d);
            }
            _ => {
                let mut step = 1.0;
                loop {
                    let x = b - step;
                    let (g, d, p) = f(x);
                    note(g - target, p, &mut best);
                    if g <= target {
                        (a, ga, da) = (x, g, d);
                        break;
                    }
                    (b, gb, db) = (x, g, d);
                    step *= 2.0;
                    if step > 1e6 {
                        return best.1;
                    }
                }
            }
        }
    }
    if best.0.abs() <= tol {
        return best.1;
    }

    let mut x = if (ga - target).abs() < (gb - target).abs() { a } else { b };
    let (mut g, mut d) = if x == a { (ga, da) } else { (gb, db) };
    for _ in 0..MAX_ITER {
        let mut next = x - (g - target) / d;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if next <= a || next >= b {
            break;
        }
        let (gn, dn, p) = f(next);
        note(gn - target, p, &mut best);
        if (gn - target).abs() <= tol {
            break;
        }
        if gn < target {
            a = next;
        } else {
            b = next;
        }
        (x, g, d) = (next, gn, dn);
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
    }
    best.1
}
