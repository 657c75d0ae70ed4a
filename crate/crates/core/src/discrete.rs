//! Rounding capped continuous shares into a task-to-resource allocation.
//!
//! Tasks are sorted by capped share, largest first. Resource `R_k` receives
//! the next `⌈γ·n^{2/c} / x̄⌉` tasks, where `x̄` is the share of the first task
//! it receives, so that a task with share `x` never lands on a resource with
//! more than `⌈γ·n^{2/c} / x⌉` tasks.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::continuous::{solve_capped, CappedResult, ContinuousError};
use crate::graph::{hat_cost, streaming_cost, Allocation, StreamingGraph};
use crate::spd::{expand, SpdTree};

pub const DEFAULT_GAMMA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscreteError {
    #[error("resource count must be positive")]
    ZeroResources,
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("report does not belong to this instance: {0}")]
    MismatchedReport(String),
    #[error(transparent)]
    Continuous(#[from] ContinuousError),
}

/// One packed block: resource index (1-based), position of its first task in
/// the sorted order, and the number of tasks it received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupBoundary {
    pub resource: usize,
    pub start: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolveReport {
    pub allocation: Allocation,
    pub shares_used: CappedResult,
    pub group_boundaries: Vec<GroupBoundary>,
    pub gamma: f64,
    pub resources_used: usize,
    /// The blocks ran out of resources and the tail went to `R_c`.
    pub overflow: bool,
}

impl DiscreteSolveReport {
    /// `{"allocation", "critical_path", "d", "d_hat", "delta", "gamma", "groups", "overflow"}`.
    pub fn to_json(&self, g: &StreamingGraph) -> Value {
        let cost = streaming_cost(g, &self.allocation).expect("allocation covers the graph");
        json!({
            "allocation": self.allocation.assignment(),
            "critical_path": cost.critical_path,
            "d": cost.total_cost,
            "d_hat": hat_cost(g, &self.allocation).expect("allocation covers the graph"),
            "delta": self.shares_used.delta,
            "gamma": self.gamma,
            "groups": self.group_boundaries.iter().map(|b| [b.resource, b.start, b.size]).collect::<Vec<_>>(),
            "overflow": self.overflow,
        })
    }
}

/// `γ·n^{2/c}`.
pub fn block_bound(n: usize, c: usize, gamma: f64) -> f64 {
    gamma * (n as f64).powf(2.0 / c as f64)
}

/// A^disc with packing constant `gamma`.
pub fn allocate(t: &SpdTree, c: usize, gamma: f64) -> Result<DiscreteSolveReport, DiscreteError> {
    let g = expand(t);
    let capped = capped_shares(t, c, gamma)?;
    let groups: Vec<Vec<usize>> = (0..g.len()).map(|v| vec![v]).collect();
    Ok(pack(&g, c, gamma, capped, &groups))
}

pub(crate) fn capped_shares(t: &SpdTree, c: usize, gamma: f64) -> Result<CappedResult, DiscreteError> {
    if c == 0 {
        return Err(DiscreteError::ZeroResources);
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(DiscreteError::InvalidGamma(gamma));
    }
    Ok(solve_capped(t, c as f64)?)
}

/// Task indices sorted by share descending, ties by task id.
fn sorted_order(g: &StreamingGraph, capped: &CappedResult) -> (Vec<usize>, Vec<f64>) {
    let shares: Vec<f64> = g.tasks().iter().map(|t| capped.shares.shares[&t.id]).collect();
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| shares[b].total_cmp(&shares[a]).then_with(|| g.task(a).id.cmp(&g.task(b).id)));
    (order, shares)
}

/// Packs sorted blocks onto resources. `groups` partitions the task indices;
/// when a block reaches the first member of a group, the whole group joins
/// that block and uses up room for all of its members.
pub(crate) fn pack(
    g: &StreamingGraph,
    c: usize,
    gamma: f64,
    capped: CappedResult,
    groups: &[Vec<usize>],
) -> DiscreteSolveReport {
    let n = g.len();
    let (order, shares) = sorted_order(g, &capped);
    let mut group_of = vec![0; n];
    for (k, members) in groups.iter().enumerate() {
        for &v in members {
            group_of[v] = k;
        }
    }
    let bound = block_bound(n, c, gamma);
    let mut resource = vec![usize::MAX; n];
    let mut boundaries: Vec<GroupBoundary> = Vec::new();
    let mut overflow = false;
    let mut i = 0;
    let mut next = 1;
    while i < n {
        if resource[order[i]] != usize::MAX {
            i += 1;
            continue;
        }
        if next > c {
            overflow = true;
            let last = boundaries.last_mut().expect("c ≥ 1 blocks were placed");
            for &v in &order[i..] {
                if resource[v] == usize::MAX {
                    resource[v] = c - 1;
                    last.size += 1;
                }
            }
            break;
        }
        let room = (bound / shares[order[i]]).ceil();
        let mut placed = 0usize;
        let start = i;
        while i < n && (placed as f64) < room {
            let v = order[i];
            i += 1;
            if resource[v] != usize::MAX {
                continue;
            }
            for &u in &groups[group_of[v]] {
                resource[u] = next - 1;
                placed += 1;
            }
        }
        boundaries.push(GroupBoundary { resource: next, start, size: placed });
        next += 1;
    }
    let allocation = Allocation::from_dense(g, &resource, c);
    let resources_used = allocation.resources_used();
    DiscreteSolveReport { allocation, shares_used: capped, group_boundaries: boundaries, gamma, resources_used, overflow }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub d: f64,
    pub d_hat: f64,
    pub delta: f64,
    pub ratio_hat: f64,
    pub ratio: f64,
    /// `γ·n^{2/c} + 1`.
    pub bound: f64,
    pub overflow: bool,
    /// Whether `n(r(v)) ≤ ⌈γ·n^{2/c}/x(v)⌉` for every task; not checked after overflow.
    pub share_bound_holds: Option<bool>,
}

pub fn approximation_diagnostics(
    t: &SpdTree,
    c: usize,
    report: &DiscreteSolveReport,
) -> Result<Diagnostics, DiscreteError> {
    let g = expand(t);
    let mismatch = |m: String| Err(DiscreteError::MismatchedReport(m));
    if report.allocation.resource_count() != c {
        return mismatch(format!("report uses {} resources, expected {c}", report.allocation.resource_count()));
    }
    let ids_match = |keys: &mut dyn Iterator<Item = &String>| {
        keys.map(String::as_str).eq({
            let mut ids: Vec<&str> = g.tasks().iter().map(|t| t.id.as_str()).collect();
            ids.sort_unstable();
            ids
        })
    };
    if !ids_match(&mut report.allocation.assignment().keys()) {
        return mismatch("allocated tasks differ from the tree's tasks".into());
    }
    if !ids_match(&mut report.shares_used.shares.shares.keys()) {
        return mismatch("shares differ from the tree's tasks".into());
    }
    let d = streaming_cost(&g, &report.allocation).expect("allocation covers the graph").total_cost;
    let d_hat = hat_cost(&g, &report.allocation).expect("allocation covers the graph");
    let delta = report.shares_used.delta;
    let bound_base = block_bound(g.len(), c, report.gamma);
    let share_bound_holds = (!report.overflow).then(|| {
        let counts = report.allocation.task_counts();
        g.tasks().iter().all(|t| {
            let k = counts[report.allocation.resource_of(&t.id).unwrap() - 1] as f64;
            k <= (bound_base / report.shares_used.shares.shares[&t.id]).ceil()
        })
    });
    Ok(Diagnostics {
        d,
        d_hat,
        delta,
        ratio_hat: d_hat / delta,
        ratio: d / delta,
        bound: bound_base + 1.0,
        overflow: report.overflow,
        share_bound_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::parse_tree;

    #[test]
    fn four_parallel_units_share_one_resource() {
        let t = parse_tree("p(a:1, b:1, c:1, d:1)").unwrap();
        let r = allocate(&t, 2, 2.0).unwrap();
        assert_eq!(r.resources_used, 1);
        assert!(!r.overflow);
        assert_eq!(r.group_boundaries, vec![GroupBoundary { resource: 1, start: 0, size: 4 }]);
        let diag = approximation_diagnostics(&t, 2, &r).unwrap();
        assert_eq!(diag.d, 4.0);
        assert!((diag.ratio_hat - 2.0).abs() < 1e-12);
        assert_eq!(diag.bound, 9.0);
        assert_eq!(diag.share_bound_holds, Some(true));
    }

    #[test]
    fn single_leaf() {
        let t = parse_tree("a:3").unwrap();
        for c in 1..5 {
            let r = allocate(&t, c, 2.0).unwrap();
            assert_eq!(r.allocation.resource_of("a"), Some(1));
            let diag = approximation_diagnostics(&t, c, &r).unwrap();
            assert_eq!(diag.d, 3.0);
            assert_eq!(diag.ratio, 1.0);
        }
    }

    #[test]
    fn capped_outlier_example() {
        let t = parse_tree("p(a:4, b:1, c:1)").unwrap();
        let r = allocate(&t, 3, 2.0).unwrap();
        assert_eq!(r.resources_used, 1);
        assert_eq!(approximation_diagnostics(&t, 3, &r).unwrap().d, 12.0);
    }

    #[test]
    fn small_gamma_splits_and_overflows() {
        let t = parse_tree("p(a:1, b:1, c:1, d:1, e:1)").unwrap();
        // shares 0.4 each, bound 0.1·5 = 0.5, blocks of ⌈1.25⌉ = 2
        let r = allocate(&t, 2, 0.1).unwrap();
        assert!(r.overflow);
        assert_eq!(r.allocation.task_counts(), vec![2, 3]);
        assert_eq!(r.group_boundaries.last().unwrap().size, 3);
        assert_eq!(approximation_diagnostics(&t, 2, &r).unwrap().share_bound_holds, None);
    }

    #[test]
    fn grouped_packing_keeps_groups_together() {
        let t = parse_tree("p(a:1, b:1, c:1, d:1)").unwrap();
        let g = expand(&t);
        let capped = capped_shares(&t, 4, 0.5).unwrap();
        // shares all 1, bound 0.5·2 = 1: one task per block unless grouped
        let groups = vec![vec![0, 3], vec![1], vec![2]];
        let r = pack(&g, 4, 0.5, capped, &groups);
        assert_eq!(r.allocation.resource_of("a"), r.allocation.resource_of("d"));
        assert_eq!(r.allocation.task_counts(), vec![2, 1, 1, 0]);
    }

    #[test]
    fn mismatched_report() {
        let t = parse_tree("p(a:1, b:1)").unwrap();
        let r = allocate(&t, 2, 2.0).unwrap();
        let other = parse_tree("p(a:1, c:1)").unwrap();
        assert!(matches!(approximation_diagnostics(&other, 2, &r), Err(DiscreteError::MismatchedReport(_))));
        assert!(matches!(approximation_diagnostics(&t, 3, &r), Err(DiscreteError::MismatchedReport(_))));
        assert!(matches!(allocate(&t, 0, 2.0), Err(DiscreteError::ZeroResources)));
        assert!(matches!(allocate(&t, 2, 0.0), Err(DiscreteError::InvalidGamma(_))));
    }
}
