//! Reference solvers for small instances.
//!
//! * [`brute_force_optimal`] enumerates every allocation up to relabeling of
//!   the (identical) resources, i.e. every set partition of the tasks into at
//!   most `c` blocks, written as restricted growth strings.
//! * [`enumerate_paths`] lists every source-to-sink path explicitly.
//! * [`numeric_continuous_min`] minimizes the continuous relaxation directly
//!   over the explicit path list with a log-barrier interior-point method.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::continuous::ShareAssignment;
use crate::graph::{dense_streaming_cost, Allocation, StreamingGraph};
use crate::spd::{expand, SpdTree};

pub const ENV_MAX_N: &str = "SPD_ORACLE_MAX_N";

/// Largest tree accepted by [`numeric_continuous_min`].
pub const NUMERIC_MAX_LEAVES: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance with {n} tasks exceeds the oracle limit of {limit} for c = {c}")]
    InstanceTooLarge { n: usize, c: usize, limit: usize },
    #[error("graph has more than {limit} source-sink paths")]
    TooManyPaths { limit: usize },
    #[error("resource count must be positive")]
    ZeroResources,
    #[error("capacity and cap must be positive")]
    InvalidCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub max_n_c2: usize,
    pub max_n_c3: usize,
    pub max_n_more: usize,
    pub max_paths: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_n_c2: 14, max_n_c3: 10, max_n_more: 8, max_paths: 1_000_000 }
    }
}

impl OracleConfig {
    /// Defaults, with every task-count limit replaced by `SPD_ORACLE_MAX_N` when set.
    pub fn from_env() -> Self {
        let mut config = Self::default();
        if let Some(n) = std::env::var(ENV_MAX_N).ok().and_then(|v| v.trim().parse().ok()) {
            config = config.with_max_n(n);
        }
        config
    }

    pub fn with_max_n(self, n: usize) -> Self {
        Self { max_n_c2: n, max_n_c3: n, max_n_more: n, ..self }
    }

    pub fn max_n(&self, c: usize) -> usize {
        match c {
            0 | 1 => usize::MAX,
            2 => self.max_n_c2,
            3 => self.max_n_c3,
            _ => self.max_n_more,
        }
    }
}

/// An optimal allocation of `g` onto `c` resources and its streaming cost,
/// with limits from [`OracleConfig::from_env`].
pub fn brute_force_optimal(g: &StreamingGraph, c: usize) -> Result<(Allocation, f64), OracleError> {
    brute_force_optimal_with(g, c, &OracleConfig::from_env())
}

/// Among all optimal partitions the lexicographically smallest restricted
/// growth string wins, so the result does not depend on thread scheduling.
pub fn brute_force_optimal_with(
    g: &StreamingGraph,
    c: usize,
    config: &OracleConfig,
) -> Result<(Allocation, f64), OracleError> {
    if c == 0 {
        return Err(OracleError::ZeroResources);
    }
    let n = g.len();
    let limit = config.max_n(c);
    if n > limit {
        return Err(OracleError::InstanceTooLarge { n, c, limit });
    }
    let prefix_len = n.min(6);
    let mut prefixes = Vec::new();
    rgs_prefixes(&mut vec![0; prefix_len], 0, 0, c, &mut prefixes);

    let best = prefixes
        .into_par_iter()
        .map(|prefix| {
            let mut rgs = vec![0usize; n];
            rgs[..prefix_len].copy_from_slice(&prefix);
            let mut counts = vec![0usize; c];
            for &r in &prefix {
                counts[r] += 1;
            }
            let used = prefix.iter().max().map_or(0, |&m| m + 1);
            let mut best: Option<(f64, Vec<usize>)> = None;
            search(g, &mut rgs, &mut counts, prefix_len, used, c, &mut best);
            best.expect("every prefix extends to at least one partition")
        })
        .reduce_with(better)
        .expect("at least one partition");
    Ok((Allocation::from_dense(g, &best.1, c), best.0))
}

fn better(a: (f64, Vec<usize>), b: (f64, Vec<usize>)) -> (f64, Vec<usize>) {
    match a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)) {
        std::cmp::Ordering::Greater => b,
        _ => a,
    }
}

fn rgs_prefixes(buf: &mut Vec<usize>, i: usize, used: usize, c: usize, out: &mut Vec<Vec<usize>>) {
    if i == buf.len() {
        out.push(buf.clone());
        return;
    }
    for r in 0..(used + 1).min(c) {
        buf[i] = r;
        rgs_prefixes(buf, i + 1, used.max(r + 1), c, out);
    }
}

fn search(
    g: &StreamingGraph,
    rgs: &mut [usize],
    counts: &mut [usize],
    i: usize,
    used: usize,
    c: usize,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if i == rgs.len() {
        let cost = dense_streaming_cost(g, rgs, counts);
        // lexicographic order of the search means the first minimum is the smallest string
        if best.as_ref().is_none_or(|b| cost < b.0) {
            *best = Some((cost, rgs.to_vec()));
        }
        return;
    }
    for r in 0..(used + 1).min(c) {
        rgs[i] = r;
        counts[r] += 1;
        search(g, rgs, counts, i + 1, used.max(r + 1), c, best);
        counts[r] -= 1;
    }
}

/// Every source-to-sink path as a task-index list, in lexicographic order of
/// the index sequences. Fails beyond `limit` paths.
pub fn enumerate_paths_with_limit(g: &StreamingGraph, limit: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    let mut count = vec![0u128; g.len()];
    for &v in g.topological_order().iter().rev() {
        count[v] = if g.is_sink(v) { 1 } else { g.out_edges(v).map(|e| count[e.to]).sum() };
    }
    let total: u128 = (0..g.len()).filter(|&v| g.is_source(v)).map(|v| count[v]).sum();
    if total > limit as u128 {
        return Err(OracleError::TooManyPaths { limit });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut stack = Vec::new();
    for v in (0..g.len()).filter(|&v| g.is_source(v)) {
        walk(g, v, &mut stack, &mut out);
    }
    Ok(out)
}

fn walk(g: &StreamingGraph, v: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    stack.push(v);
    if g.is_sink(v) {
        out.push(stack.clone());
    } else {
        let mut next: Vec<usize> = g.out_edges(v).map(|e| e.to).collect();
        next.sort_unstable();
        for u in next {
            walk(g, u, stack, out);
        }
    }
    stack.pop();
}

/// All source-to-sink paths as task-id lists, at most 10^6 of them.
pub fn enumerate_paths(g: &StreamingGraph) -> Result<Vec<Vec<String>>, OracleError> {
    let paths = enumerate_paths_with_limit(g, OracleConfig::default().max_paths)?;
    Ok(paths.into_iter().map(|p| p.into_iter().map(|v| g.task(v).id.clone()).collect()).collect())
}

/// Numerically minimizes `max_P Σ_{v∈P} w(v)/x(v)` over `x > 0` with
/// `Σ x ≤ c` and, when `box_cap` is given, `x ≤ box_cap`.
///
/// Works on the epigraph form `min T` s.t. every path sum is at most `T` and
/// follows the central path of the logarithmic barrier with damped Newton
/// steps, stopping once the duality gap bound is below `1e-12·T`.
pub fn numeric_continuous_min(
    t: &SpdTree,
    c: f64,
    box_cap: Option<f64>,
) -> Result<(ShareAssignment, f64), OracleError> {
    let n = t.leaf_count();
    if n > NUMERIC_MAX_LEAVES {
        return Err(OracleError::InstanceTooLarge { n, c: c as usize, limit: NUMERIC_MAX_LEAVES });
    }
    if !(c > 0.0) || box_cap.is_some_and(|b| !(b > 0.0)) {
        return Err(OracleError::InvalidCapacity);
    }
    let g = expand(t);
    let w: Vec<f64> = g.tasks().iter().map(|t| t.weight).collect();
    let paths = enumerate_paths_with_limit(&g, OracleConfig::default().max_paths)?;
    let problem = Barrier { w: &w, paths: &paths, c, cap: box_cap };

    let start = 0.5 * box_cap.map_or(c / n as f64, |b| b.min(c / n as f64));
    let x = vec![start; n];
    let t0 = problem.delta(&x) * 2.0 + 1.0;
    let mut z = DVector::from_iterator(n + 1, x.into_iter().chain([t0]));

    let m = problem.term_count() as f64;
    let mut scale = 1.0 / t0;
    for _ in 0..60 {
        problem.center(&mut z, scale);
        let objective = z[n];
        if m / scale < 1e-12 * objective {
            break;
        }
        scale *= 10.0;
    }
    let x: Vec<f64> = z.iter().take(n).copied().collect();
    let delta = problem.delta(&x);
    let shares = ShareAssignment {
        capacity: c,
        shares: g.tasks().iter().zip(&x).map(|(t, &x)| (t.id.clone(), x)).collect(),
    };
    Ok((shares, delta))
}

struct Barrier<'a> {
    w: &'a [f64],
    paths: &'a [Vec<usize>],
    c: f64,
    cap: Option<f64>,
}

impl Barrier<'_> {
    fn term_count(&self) -> usize {
        self.paths.len() + 1 + self.w.len() * if self.cap.is_some() { 2 } else { 1 }
    }

    fn path_sum(&self, p: &[usize], x: &[f64]) -> f64 {
        p.iter().map(|&v| self.w[v] / x[v]).sum()
    }

    fn delta(&self, x: &[f64]) -> f64 {
        self.paths.iter().map(|p| self.path_sum(p, x)).fold(0.0, f64::max)
    }

    /// `scale·T − Σ log(slacks)`, or `None` outside the domain.
    fn value(&self, z: &DVector<f64>, scale: f64) -> Option<f64> {
        let n = self.w.len();
        let x = &z.as_slice()[..n];
        let t = z[n];
        let mut f = scale * t;
        let mut log_slack = |s: f64| {
            if s > 0.0 {
                f -= s.ln();
                true
            } else {
                false
            }
        };
        if x.iter().any(|&xv| !log_slack(xv)) {
            return None;
        }
        if let Some(cap) = self.cap {
            if x.iter().any(|&xv| !log_slack(cap - xv)) {
                return None;
            }
        }
        if !log_slack(self.c - x.iter().sum::<f64>()) {
            return None;
        }
        for p in self.paths {
            if !log_slack(t - self.path_sum(p, x)) {
                return None;
            }
        }
        Some(f)
    }

    fn gradient_hessian(&self, z: &DVector<f64>, scale: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.w.len();
        let x = &z.as_slice()[..n];
        let t = z[n];
        let mut grad = DVector::zeros(n + 1);
        let mut hess = DMatrix::zeros(n + 1, n + 1);
        grad[n] = scale;
        for v in 0..n {
            grad[v] -= 1.0 / x[v];
            hess[(v, v)] += 1.0 / (x[v] * x[v]);
            if let Some(cap) = self.cap {
                let s = cap - x[v];
                grad[v] += 1.0 / s;
                hess[(v, v)] += 1.0 / (s * s);
            }
        }
        let h = self.c - x.iter().sum::<f64>();
        for u in 0..n {
            grad[u] += 1.0 / h;
            for v in 0..n {
                hess[(u, v)] += 1.0 / (h * h);
            }
        }
        let mut a = DVector::zeros(n + 1);
        for p in self.paths {
            let g = t - self.path_sum(p, x);
            a.fill(0.0);
            a[n] = 1.0;
            for &v in p {
                a[v] = self.w[v] / (x[v] * x[v]);
                hess[(v, v)] += 2.0 * self.w[v] / (x[v] * x[v] * x[v]) / g;
            }
            grad -= &a / g;
            hess.ger(1.0 / (g * g), &a, &a, 1.0);
        }
        (grad, hess)
    }

    /// Damped Newton iterations towards the minimizer of the barrier at `scale`.
    fn center(&self, z: &mut DVector<f64>, scale: f64) {
        for _ in 0..200 {
            let (grad, hess) = self.gradient_hessian(z, scale);
            let step = match hess.clone().cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => {
                    let reg = hess + DMatrix::identity(z.len(), z.len()) * 1e-12;
                    match reg.cholesky() {
                        Some(ch) => -ch.solve(&grad),
                        None => return,
                    }
                }
            };
            let decrement = -grad.dot(&step);
            if !(decrement > 1e-14) {
                return;
            }
            let f0 = self.value(z, scale).expect("iterate stays feasible");
            let mut alpha = 1.0;
            loop {
                let candidate = &*z + &step * alpha;
                if let Some(f) = self.value(&candidate, scale) {
                    if f <= f0 - 0.25 * alpha * decrement {
                        *z = candidate;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-20 {
                    return;
                }
            }
            if decrement < 1e-12 {
                return;
            }
        }
    }
}
