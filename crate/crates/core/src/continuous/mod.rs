//! Optimal continuous allocation on SPD trees.
//!
//! In the continuous relaxation every task receives a positive share `x(v)` of
//! a total capacity `c` and costs `w(v) / x(v)`; the objective is the costliest
//! path. On an SPD tree the optimum is computed exactly in two passes:
//!
//! * [`compute_weights`] annotates every tree node bottom-up with the optimal
//!   cost of its subtree at unit capacity: `(Σ √w(z_i))²` for serial nodes and
//!   `Σ w(z_i)` for parallel nodes;
//! * [`compute_mapping`] splits the capacity top-down, proportionally to
//!   `√w(z_i)` among serial children and to `w(z_i)` among parallel children.
//!
//! [`solve_capped`] adds the constraint `x(v) ≤ 1` by repeatedly pinning the
//! largest share above one and re-solving the residual problem.

mod residual;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{longest_path, CostReport};
use crate::spd::{expand, Op, SpdTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuousError {
    #[error("task {0} has a non-positive share")]
    ZeroShare(String),
    #[error("task {0} has no share")]
    MissingShare(String),
    #[error("share given for unknown task {0}")]
    UnknownTask(String),
    #[error("capacity must be positive, got {0}")]
    InvalidCapacity(f64),
}

/// Shares of a capacity assigned to tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareAssignment {
    pub capacity: f64,
    pub shares: BTreeMap<String, f64>,
}

impl ShareAssignment {
    pub fn get(&self, task: &str) -> Option<f64> {
        self.shares.get(task).copied()
    }

    pub fn total(&self) -> f64 {
        self.shares.values().sum()
    }

    /// Every share multiplied by `factor`, capacity included.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            capacity: self.capacity * factor,
            shares: self.shares.iter().map(|(k, &x)| (k.clone(), x * factor)).collect(),
        }
    }
}

/// A tree node together with the optimal unit-capacity cost of its subtree.
#[derive(Debug, Clone)]
pub struct AnnotatedTree<'a> {
    pub node: &'a SpdTree,
    pub weight: f64,
    pub children: Vec<AnnotatedTree<'a>>,
}

pub fn compute_weights(tree: &SpdTree) -> AnnotatedTree<'_> {
    match tree {
        SpdTree::Leaf(l) => AnnotatedTree { node: tree, weight: l.weight(), children: Vec::new() },
        SpdTree::Inner(inner) => {
            let children: Vec<_> = inner.children().iter().map(compute_weights).collect();
            let weight = combine(inner.op(), children.iter().map(|c| c.weight));
            AnnotatedTree { node: tree, weight, children }
        }
    }
}

pub(crate) fn combine(op: Op, weights: impl Iterator<Item = f64>) -> f64 {
    match op {
        Op::Serial => weights.map(f64::sqrt).sum::<f64>().powi(2),
        Op::Parallel => weights.sum(),
    }
}

pub fn compute_mapping(annotated: &AnnotatedTree<'_>, capacity: f64) -> Result<ShareAssignment, ContinuousError> {
    if !(capacity > 0.0) || !capacity.is_finite() {
        return Err(ContinuousError::InvalidCapacity(capacity));
    }
    let mut shares = BTreeMap::new();
    split(annotated, capacity, &mut shares);
    Ok(ShareAssignment { capacity, shares })
}

fn split(z: &AnnotatedTree<'_>, capacity: f64, shares: &mut BTreeMap<String, f64>) {
    match z.node {
        SpdTree::Leaf(l) => {
            shares.insert(l.id().to_string(), capacity);
        }
        SpdTree::Inner(inner) => split_children(inner.op(), &z.children, capacity, |c, x| split(c, x, shares)),
    }
}

/// Applies the optimal serial/parallel capacity split to `children`.
pub(crate) fn split_children<'c, T: HasWeight + 'c>(
    op: Op,
    children: &'c [T],
    capacity: f64,
    mut visit: impl FnMut(&'c T, f64),
) {
    match op {
        Op::Serial => {
            let total: f64 = children.iter().map(|c| c.weight().sqrt()).sum();
            for c in children {
                visit(c, capacity * c.weight().sqrt() / total);
            }
        }
        Op::Parallel => {
            let total: f64 = children.iter().map(|c| c.weight()).sum();
            for c in children {
                visit(c, capacity * c.weight() / total);
            }
        }
    }
}

pub(crate) trait HasWeight {
    fn weight(&self) -> f64;
}

impl HasWeight for AnnotatedTree<'_> {
    fn weight(&self) -> f64 {
        self.weight
    }
}

/// A^cont: optimal shares of `capacity` for the SPD graph of `tree`.
pub fn solve(tree: &SpdTree, capacity: f64) -> Result<ShareAssignment, ContinuousError> {
    compute_mapping(&compute_weights(tree), capacity)
}

/// δ(G): the costliest path with node cost `w(v) / x(v)` and free edges.
pub fn continuous_cost(tree: &SpdTree, shares: &ShareAssignment) -> Result<CostReport, ContinuousError> {
    let g = expand(tree);
    if let Some(id) = shares.shares.keys().find(|id| g.index_of(id).is_none()) {
        return Err(ContinuousError::UnknownTask(id.clone()));
    }
    let mut node_cost = Vec::with_capacity(g.len());
    for t in g.tasks() {
        let x = shares.get(&t.id).ok_or_else(|| ContinuousError::MissingShare(t.id.clone()))?;
        if !(x > 0.0) {
            return Err(ContinuousError::ZeroShare(t.id.clone()));
        }
        node_cost.push(t.weight / x);
    }
    let (total_cost, path) = longest_path(&g, &node_cost, &vec![0.0; g.edges().len()]);
    Ok(CostReport {
        total_cost,
        critical_path: path.iter().map(|&v| g.task(v).id.clone()).collect(),
        per_node_cost: g.tasks().iter().zip(&node_cost).map(|(t, &c)| (t.id.clone(), c)).collect(),
        per_resource_load: BTreeMap::new(),
    })
}

/// Optimal shares under the additional constraint `x(v) ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CappedResult {
    pub shares: ShareAssignment,
    /// Tasks pinned to share 1, in pin order.
    pub fixed: Vec<String>,
    /// δ(G) under `shares`.
    pub delta: f64,
}

/// Repeats A^cont on the residual problem, each round pinning the single
/// largest share above 1 (ties by task id), until no share exceeds 1.
///
/// Pinned tasks leave the optimization: they cost `w(v)` and consume one unit
/// of capacity. The residual capacity is split optimally among the free tasks
/// with pinned costs acting as additive constants under serial composition and
/// as floors under parallel composition.
pub fn solve_capped(tree: &SpdTree, capacity: f64) -> Result<CappedResult, ContinuousError> {
    if !(capacity > 0.0) || !capacity.is_finite() {
        return Err(ContinuousError::InvalidCapacity(capacity));
    }
    let n = tree.leaf_count();
    let mut fixed: Vec<String> = Vec::new();
    let mut fixed_set: BTreeSet<String> = BTreeSet::new();
    let mut shares = solve(tree, capacity)?.shares;
    for _ in 0..=n {
        let over = shares
            .iter()
            .filter(|(id, &x)| x > 1.0 && !fixed_set.contains(*id))
            .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)));
        let Some((id, _)) = over else { break };
        let id = id.clone();
        fixed_set.insert(id.clone());
        fixed.push(id);
        let residual = capacity - fixed.len() as f64;
        if fixed.len() == n {
            shares = fixed.iter().map(|id| (id.clone(), 1.0)).collect();
            break;
        }
        assert!(residual > 0.0, "residual capacity is positive while free tasks remain");
        shares = residual::solve(tree, &fixed_set, residual);
    }
    debug_assert!(shares.values().all(|&x| x > 0.0 && x <= 1.0));
    let shares = ShareAssignment { capacity, shares };
    let delta = continuous_cost(tree, &shares)?.total_cost;
    Ok(CappedResult { shares, fixed, delta })
}
