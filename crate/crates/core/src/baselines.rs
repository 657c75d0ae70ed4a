//! Simple allocators used for comparison: everything on one resource,
//! weight balancing, and greedy edge collocation on top of A^disc.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discrete::{capped_shares, pack, DiscreteError, DiscreteSolveReport};
use crate::graph::{streaming_cost, Allocation, StreamingGraph};
use crate::spd::{expand, SpdTree};

/// Every task on `R_1`.
pub fn trivial_single(g: &StreamingGraph) -> Allocation {
    Allocation::single(g, 1)
}

/// Longest-processing-time balancing by weight sum.
///
/// Tasks are taken by weight descending (ties by id) and each goes to the
/// resource with the smallest weight sum. Among equally loaded resources the
/// one whose heaviest task is lightest wins, then the lowest index.
pub fn balanced_avg(g: &StreamingGraph, c: usize) -> Allocation {
    assert!(c > 0, "resource count must be positive");
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| {
        g.task(b).weight.total_cmp(&g.task(a).weight).then_with(|| g.task(a).id.cmp(&g.task(b).id))
    });
    let mut load = vec![0.0f64; c];
    let mut heaviest = vec![0.0f64; c];
    let mut dense = vec![0; g.len()];
    for v in order {
        let r = (0..c)
            .min_by(|&a, &b| {
                load[a].total_cmp(&load[b]).then_with(|| heaviest[a].total_cmp(&heaviest[b])).then(a.cmp(&b))
            })
            .unwrap();
        let w = g.task(v).weight;
        load[r] += w;
        heaviest[r] = heaviest[r].max(w);
        dense[v] = r;
    }
    Allocation::from_dense(g, &dense, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GreedyPolicy {
    /// Keep a constraint only if it lowers d(G).
    RetainIfImproves,
    /// Keep a constraint unless it raises d(G).
    RetainUnlessWorse,
    /// Keep a constraint unless some path through its edge gets costlier.
    RetainUnlessPathWorse,
}

impl FromStr for GreedyPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "improve" | "RETAIN_IF_IMPROVES" => Ok(Self::RetainIfImproves),
            "keep" | "RETAIN_UNLESS_WORSE" => Ok(Self::RetainUnlessWorse),
            "path" | "RETAIN_UNLESS_PATH_WORSE" => Ok(Self::RetainUnlessPathWorse),
            _ => Err(format!("unknown greedy policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyResult {
    pub report: DiscreteSolveReport,
    /// Retained collocation constraints as (source id, target id), in traversal order.
    pub retained: Vec<(String, String)>,
    pub cost: f64,
}

const TOLERANCE: f64 = 1e-9;

/// Greedy edge collocation: edges are visited heaviest first (ties by source
/// id, then target id); each adds a tentative `r(u) = r(v)` constraint, the
/// allocation is recomputed by A^disc with all constraints enforced during
/// packing, and the constraint is kept or dropped according to `policy`.
pub fn greedy_collocate(
    t: &SpdTree,
    c: usize,
    policy: GreedyPolicy,
    gamma: f64,
) -> Result<GreedyResult, DiscreteError> {
    let g = expand(t);
    let capped = capped_shares(t, c, gamma)?;
    let mut groups = UnionFind::new(g.len());
    let solve = |groups: &UnionFind| {
        let report = pack(&g, c, gamma, capped.clone(), &groups.sets());
        let cost = streaming_cost(&g, &report.allocation).expect("allocation covers the graph").total_cost;
        (report, cost)
    };
    let (mut report, mut cost) = solve(&groups);

    let mut edges: Vec<usize> = (0..g.edges().len()).collect();
    let key = |k: usize| {
        let e = &g.edges()[k];
        (e.weight, &g.task(e.from).id, &g.task(e.to).id)
    };
    edges.sort_by(|&a, &b| {
        let (wa, ua, va) = key(a);
        let (wb, ub, vb) = key(b);
        wb.total_cmp(&wa).then_with(|| ua.cmp(ub)).then_with(|| va.cmp(vb))
    });

    let mut retained = Vec::new();
    for k in edges {
        let e = &g.edges()[k];
        if groups.find(e.from) == groups.find(e.to) {
            continue;
        }
        let mut tentative = groups.clone();
        tentative.union(e.from, e.to);
        let (new_report, new_cost) = solve(&tentative);
        let scale = TOLERANCE * cost.abs().max(1.0);
        let keep = match policy {
            GreedyPolicy::RetainIfImproves => new_cost < cost - scale,
            GreedyPolicy::RetainUnlessWorse => new_cost <= cost + scale,
            GreedyPolicy::RetainUnlessPathWorse => {
                worst_path_increase(&g, k, &report.allocation, &new_report.allocation) <= scale
            }
        };
        if keep {
            groups = tentative;
            report = new_report;
            cost = new_cost;
            retained.push((g.task(e.from).id.clone(), g.task(e.to).id.clone()));
        }
    }
    Ok(GreedyResult { report, retained, cost })
}

/// `max over paths P through edge k of d_new(P) − d_old(P)`.
///
/// Path costs are additive, so this is the best prefix change ending at the
/// edge's source, plus the edge's own change, plus the best suffix change
/// starting at its target.
fn worst_path_increase(g: &StreamingGraph, k: usize, old: &Allocation, new: &Allocation) -> f64 {
    let node_delta = node_costs(g, new).iter().zip(node_costs(g, old)).map(|(a, b)| a - b).collect::<Vec<_>>();
    let edge_delta: Vec<f64> = edge_costs(g, new).iter().zip(edge_costs(g, old)).map(|(a, b)| a - b).collect();
    let mut incoming = vec![Vec::new(); g.len()];
    let mut outgoing = vec![Vec::new(); g.len()];
    for (j, e) in g.edges().iter().enumerate() {
        incoming[e.to].push(j);
        outgoing[e.from].push(j);
    }
    let best = |edges: &[usize], value: &dyn Fn(usize) -> f64| {
        if edges.is_empty() { 0.0 } else { edges.iter().map(|&j| value(j)).fold(f64::NEG_INFINITY, f64::max) }
    };
    let mut prefix = vec![0.0; g.len()];
    for &v in g.topological_order() {
        prefix[v] = node_delta[v] + best(&incoming[v], &|j| prefix[g.edges()[j].from] + edge_delta[j]);
    }
    let mut suffix = vec![0.0; g.len()];
    for &v in g.topological_order().iter().rev() {
        suffix[v] = node_delta[v] + best(&outgoing[v], &|j| suffix[g.edges()[j].to] + edge_delta[j]);
    }
    let e = &g.edges()[k];
    prefix[e.from] + edge_delta[k] + suffix[e.to]
}

fn node_costs(g: &StreamingGraph, alloc: &Allocation) -> Vec<f64> {
    let counts = alloc.task_counts();
    g.tasks().iter().map(|t| t.weight * counts[alloc.resource_of(&t.id).unwrap() - 1] as f64).collect()
}

fn edge_costs(g: &StreamingGraph, alloc: &Allocation) -> Vec<f64> {
    let r = |v: usize| alloc.resource_of(&g.task(v).id);
    g.edges().iter().map(|e| if r(e.from) != r(e.to) { e.weight } else { 0.0 }).collect()
}

#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut v = v;
        while self.parent[v] != root {
            let next = self.parent[v];
            self.parent[v] = root;
            v = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        match ra.cmp(&rb) {
            Ordering::Less => self.parent[rb] = ra,
            Ordering::Greater => self.parent[ra] = rb,
            Ordering::Equal => {}
        }
    }

    /// Members of every set, sets ordered by smallest member.
    fn sets(&self) -> Vec<Vec<usize>> {
        let mut uf = self.clone();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); self.parent.len()];
        for v in 0..self.parent.len() {
            let r = uf.find(v);
            by_root[r].push(v);
        }
        by_root.into_iter().filter(|s| !s.is_empty()).collect()
    }
}
