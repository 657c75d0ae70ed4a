//! Streaming graphs, allocations and the discrete streaming-cost model.
//!
//! A [`StreamingGraph`] is a weighted DAG: every node is a task with a positive
//! computational weight, every edge a data stream with a non-negative transfer
//! weight. An [`Allocation`] maps tasks onto `c` identical resources. Tasks that
//! share a resource share it equally, so a task's processing cost is its weight
//! times the number of tasks on its resource, and an edge costs its weight only
//! when its endpoints sit on different resources. The streaming cost of the
//! whole graph is the costliest source-to-sink path.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack used when deciding whether two path costs tie.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("cycle detected through edge {from} -> {to}")]
    CycleDetected { from: String, to: String },
    #[error("task {0} has non-positive weight {1}")]
    NonPositiveNodeWeight(String, f64),
    #[error("edge {from} -> {to} has negative weight {weight}")]
    NegativeEdgeWeight { from: String, to: String, weight: f64 },
    #[error("duplicate task id {0}")]
    DuplicateTask(String),
    #[error("task id must be non-empty")]
    EmptyTaskId,
    #[error("edge {from} -> {to} references an unknown task")]
    DanglingEdge { from: String, to: String },
    #[error("self-loop on task {0}")]
    SelfLoop(String),
    #[error("parallel edge {from} -> {to}")]
    ParallelEdge { from: String, to: String },
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("unknown edge {from} -> {to}")]
    UnknownEdge { from: String, to: String },
    #[error("task {0} is not allocated")]
    UncoveredTask(String),
    #[error("resource index {index} of task {task} outside 1..={count}")]
    ResourceOutOfRange { task: String, index: usize, count: usize },
    #[error("resource count must be positive")]
    ZeroResources,
    #[error("graph has no tasks")]
    Empty,
    #[error("invalid graph json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// A validated, immutable streaming graph.
///
/// Construction checks every invariant and caches the topological order,
/// adjacency lists and the source/sink sets.
#[derive(Debug, Clone)]
pub struct StreamingGraph {
    tasks: Vec<Task>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
    edge_index: HashMap<(usize, usize), usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl StreamingGraph {
    /// Builds and validates a graph from `(id, weight)` tasks and
    /// `(from, to, weight)` edges given by task id.
    pub fn new<S: AsRef<str>>(
        tasks: impl IntoIterator<Item = (S, f64)>,
        edges: impl IntoIterator<Item = (S, S, f64)>,
    ) -> Result<Self, GraphError> {
        let tasks: Vec<Task> = tasks
            .into_iter()
            .map(|(id, weight)| Task { id: id.as_ref().to_string(), weight })
            .collect();
        let mut index = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            if t.id.is_empty() {
                return Err(GraphError::EmptyTaskId);
            }
            if !(t.weight > 0.0) || !t.weight.is_finite() {
                return Err(GraphError::NonPositiveNodeWeight(t.id.clone(), t.weight));
            }
            if index.insert(t.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateTask(t.id.clone()));
            }
        }
        let mut resolved = Vec::new();
        for (u, v, b) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            let (Some(&from), Some(&to)) = (index.get(u), index.get(v)) else {
                return Err(GraphError::DanglingEdge { from: u.into(), to: v.into() });
            };
            resolved.push(Edge { from, to, weight: b });
        }
        Self::from_parts(tasks, resolved, index)
    }

    pub(crate) fn from_parts(
        tasks: Vec<Task>,
        edges: Vec<Edge>,
        index: HashMap<String, usize>,
    ) -> Result<Self, GraphError> {
        if tasks.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = tasks.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            let (from, to) = (&tasks[e.from].id, &tasks[e.to].id);
            if e.from == e.to {
                return Err(GraphError::SelfLoop(from.clone()));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(GraphError::NegativeEdgeWeight {
                    from: from.clone(),
                    to: to.clone(),
                    weight: e.weight,
                });
            }
            if edge_index.insert((e.from, e.to), k).is_some() {
                return Err(GraphError::ParallelEdge { from: from.clone(), to: to.clone() });
            }
            out_edges[e.from].push(k);
            in_edges[e.to].push(k);
        }

        // Kahn's algorithm; ready nodes are taken in insertion order.
        let mut indeg: Vec<usize> = in_edges.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &k in &out_edges[v] {
                let w = edges[k].to;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        if topo.len() < n {
            let e = edges
                .iter()
                .find(|e| indeg[e.from] > 0 && indeg[e.to] > 0)
                .expect("a leftover node lies on a cycle");
            return Err(GraphError::CycleDetected {
                from: tasks[e.from].id.clone(),
                to: tasks[e.to].id.clone(),
            });
        }
        Ok(Self { tasks, edges, index, edge_index, out_edges, in_edges, topo })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn task(&self, i: usize) -> &Task {
        &self.tasks[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &Edge> {
        self.out_edges[v].iter().map(move |&k| &self.edges[k])
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = &Edge> {
        self.in_edges[v].iter().map(move |&k| &self.edges[k])
    }

    pub fn is_source(&self, v: usize) -> bool {
        self.in_edges[v].is_empty()
    }

    pub fn is_sink(&self, v: usize) -> bool {
        self.out_edges[v].is_empty()
    }

    /// Tasks without incoming edges, in insertion order.
    pub fn sources(&self) -> Vec<&str> {
        (0..self.len()).filter(|&v| self.is_source(v)).map(|v| self.tasks[v].id.as_str()).collect()
    }

    /// Tasks without outgoing edges, in insertion order.
    pub fn sinks(&self) -> Vec<&str> {
        (0..self.len()).filter(|&v| self.is_sink(v)).map(|v| self.tasks[v].id.as_str()).collect()
    }

    pub fn edge_weight(&self, from: &str, to: &str) -> Option<f64> {
        let key = (self.index_of(from)?, self.index_of(to)?);
        self.edge_index.get(&key).map(|&k| self.edges[k].weight)
    }

    pub fn min_task_weight(&self) -> f64 {
        self.tasks.iter().map(|t| t.weight).fold(f64::INFINITY, f64::min)
    }

    /// Maximum number of tasks on any source-to-sink path.
    pub fn diameter(&self) -> usize {
        let mut depth = vec![1usize; self.len()];
        for &v in self.topo.iter().rev() {
            depth[v] = 1 + self.out_edges(v).map(|e| depth[e.to]).max().unwrap_or(0);
        }
        (0..self.len()).filter(|&v| self.is_source(v)).map(|v| depth[v]).max().unwrap_or(0)
    }

    /// Resolves an allocation into a dense per-task resource vector (0-based),
    /// checking that it covers exactly this graph's tasks.
    pub fn resolve(&self, alloc: &Allocation) -> Result<Vec<usize>, GraphError> {
        for id in alloc.assignment.keys() {
            if !self.index.contains_key(id) {
                return Err(GraphError::UnknownTask(id.clone()));
            }
        }
        self.tasks
            .iter()
            .map(|t| {
                alloc
                    .assignment
                    .get(&t.id)
                    .map(|&r| r - 1)
                    .ok_or_else(|| GraphError::UncoveredTask(t.id.clone()))
            })
            .collect()
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            nodes: self.tasks.iter().map(|t| NodeJson { id: t.id.clone(), w: t.weight }).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    u: self.tasks[e.from].id.clone(),
                    v: self.tasks[e.to].id.clone(),
                    b: e.weight,
                })
                .collect(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let json: GraphJson =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        Self::try_from(json)
    }
}

/// Interchange form of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub nodes: Vec<NodeJson>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeJson {
    pub id: String,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub u: String,
    pub v: String,
    pub b: f64,
}

impl TryFrom<GraphJson> for StreamingGraph {
    type Error = GraphError;

    fn try_from(json: GraphJson) -> Result<Self, GraphError> {
        StreamingGraph::new(
            json.nodes.into_iter().map(|n| (n.id, n.w)),
            json.edges.into_iter().map(|e| (e.u, e.v, e.b)),
        )
    }
}

/// A total map from tasks to resources `1..=resource_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    assignment: BTreeMap<String, usize>,
    resource_count: usize,
}

impl Allocation {
    pub fn new(
        assignment: BTreeMap<String, usize>,
        resource_count: usize,
    ) -> Result<Self, GraphError> {
        if resource_count == 0 {
            return Err(GraphError::ZeroResources);
        }
        for (task, &index) in &assignment {
            if index == 0 || index > resource_count {
                return Err(GraphError::ResourceOutOfRange {
                    task: task.clone(),
                    index,
                    count: resource_count,
                });
            }
        }
        Ok(Self { assignment, resource_count })
    }

    /// Builds an allocation from a dense, 0-based resource vector aligned
    /// with the graph's task order.
    pub fn from_dense(g: &StreamingGraph, dense: &[usize], resource_count: usize) -> Self {
        debug_assert_eq!(dense.len(), g.len());
        let assignment =
            g.tasks.iter().zip(dense).map(|(t, &r)| (t.id.clone(), r + 1)).collect();
        Self::new(assignment, resource_count).expect("dense indices within range")
    }

    /// Every task of `g` on resource 1.
    pub fn single(g: &StreamingGraph, resource_count: usize) -> Self {
        Self::from_dense(g, &vec![0; g.len()], resource_count)
    }

    pub fn resource_of(&self, task: &str) -> Option<usize> {
        self.assignment.get(task).copied()
    }

    pub fn resource_count(&self) -> usize {
        self.resource_count
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    /// n(R) for every resource index `1..=c`.
    pub fn task_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.resource_count];
        for &r in self.assignment.values() {
            counts[r - 1] += 1;
        }
        counts
    }

    pub fn resources_used(&self) -> usize {
        self.task_counts().iter().filter(|&&k| k > 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceLoad {
    pub tasks: usize,
    pub weight: f64,
}

/// Result of evaluating a cost model on a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub total_cost: f64,
    pub critical_path: Vec<String>,
    pub per_node_cost: BTreeMap<String, f64>,
    pub per_resource_load: BTreeMap<usize, ResourceLoad>,
}

/// Longest source-to-sink path under per-node and per-edge costs.
///
/// Returns the maximum path cost and the lexicographically smallest (by task
/// id sequence) path attaining it.
pub fn longest_path(g: &StreamingGraph, node_cost: &[f64], edge_cost: &[f64]) -> (f64, Vec<usize>) {
    let best = suffix_costs(g, node_cost, edge_cost);
    let total = (0..g.len())
        .filter(|&v| g.is_source(v))
        .map(|v| best[v])
        .fold(f64::NEG_INFINITY, f64::max);
    let ties = |x: f64, target: f64| x >= target - TIE_EPS * target.abs().max(1.0);

    let mut v = (0..g.len())
        .filter(|&v| g.is_source(v) && ties(best[v], total))
        .min_by(|&a, &b| g.tasks[a].id.cmp(&g.tasks[b].id))
        .expect("a DAG has at least one source");
    let mut path = vec![v];
    while !g.is_sink(v) {
        // recomputed rather than best[v] − node_cost[v], which cancels badly for huge node costs
        let tail = g.out_edges[v].iter().map(|&k| edge_cost[k] + best[g.edges[k].to]).fold(f64::NEG_INFINITY, f64::max);
        v = g.out_edges[v]
            .iter()
            .filter(|&&k| ties(edge_cost[k] + best[g.edges[k].to], tail))
            .map(|&k| g.edges[k].to)
            .min_by(|&a, &b| g.tasks[a].id.cmp(&g.tasks[b].id))
            .expect("the maximizing successor ties with itself");
        path.push(v);
    }
    (total, path)
}

/// Maximum cost of a path from each node to any sink (node cost included).
pub(crate) fn suffix_costs(g: &StreamingGraph, node_cost: &[f64], edge_cost: &[f64]) -> Vec<f64> {
    let mut best = vec![0.0; g.len()];
    for &v in g.topo.iter().rev() {
        let tail = g.out_edges[v]
            .iter()
            .map(|&k| edge_cost[k] + best[g.edges[k].to])
            .fold(0.0, f64::max);
        best[v] = node_cost[v] + tail;
    }
    best
}

/// d(G) for a dense 0-based allocation; the hot loop used by the oracle.
pub(crate) fn dense_streaming_cost(g: &StreamingGraph, dense: &[usize], counts: &[usize]) -> f64 {
    let mut best = vec![0.0; g.len()];
    let mut total = f64::NEG_INFINITY;
    for &v in g.topo.iter().rev() {
        let mut tail: f64 = 0.0;
        for &k in &g.out_edges[v] {
            let e = &g.edges[k];
            let transfer = if dense[e.from] != dense[e.to] { e.weight } else { 0.0 };
            tail = tail.max(transfer + best[e.to]);
        }
        best[v] = g.tasks[v].weight * counts[dense[v]] as f64 + tail;
        if g.in_edges[v].is_empty() {
            total = total.max(best[v]);
        }
    }
    total
}

fn dense_counts(dense: &[usize], resource_count: usize) -> Vec<usize> {
    let mut counts = vec![0; resource_count];
    for &r in dense {
        counts[r] += 1;
    }
    counts
}

/// d(v) = w(v) · n(r(v)).
pub fn processing_cost(g: &StreamingGraph, alloc: &Allocation, task: &str) -> Result<f64, GraphError> {
    let v = g.index_of(task).ok_or_else(|| GraphError::UnknownTask(task.to_string()))?;
    let dense = g.resolve(alloc)?;
    let counts = dense_counts(&dense, alloc.resource_count);
    Ok(g.tasks[v].weight * counts[dense[v]] as f64)
}

/// ℓ(e): the edge weight if the endpoints are split, zero when collocated.
pub fn transfer_cost(
    g: &StreamingGraph,
    alloc: &Allocation,
    from: &str,
    to: &str,
) -> Result<f64, GraphError> {
    let unknown = || GraphError::UnknownEdge { from: from.to_string(), to: to.to_string() };
    let b = g.edge_weight(from, to).ok_or_else(unknown)?;
    let dense = g.resolve(alloc)?;
    let (u, v) = (g.index_of(from).unwrap(), g.index_of(to).unwrap());
    Ok(if dense[u] != dense[v] { b } else { 0.0 })
}

fn evaluate(g: &StreamingGraph, alloc: &Allocation, with_transfers: bool) -> Result<CostReport, GraphError> {
    let dense = g.resolve(alloc)?;
    let counts = dense_counts(&dense, alloc.resource_count);
    let node_cost: Vec<f64> =
        g.tasks.iter().enumerate().map(|(v, t)| t.weight * counts[dense[v]] as f64).collect();
    let edge_cost: Vec<f64> = g
        .edges
        .iter()
        .map(|e| if with_transfers && dense[e.from] != dense[e.to] { e.weight } else { 0.0 })
        .collect();
    let (total_cost, path) = longest_path(g, &node_cost, &edge_cost);

    let mut per_resource_load = BTreeMap::new();
    for (v, t) in g.tasks.iter().enumerate() {
        let load = per_resource_load
            .entry(dense[v] + 1)
            .or_insert(ResourceLoad { tasks: 0, weight: 0.0 });
        load.tasks += 1;
        load.weight += t.weight;
    }
    Ok(CostReport {
        total_cost,
        critical_path: path.iter().map(|&v| g.tasks[v].id.clone()).collect(),
        per_node_cost: g.tasks.iter().zip(&node_cost).map(|(t, &c)| (t.id.clone(), c)).collect(),
        per_resource_load,
    })
}

/// d(G): the costliest source-to-sink path including transfer costs.
pub fn streaming_cost(g: &StreamingGraph, alloc: &Allocation) -> Result<CostReport, GraphError> {
    evaluate(g, alloc, true)
}

/// d̂(G): streaming cost with every transfer cost forced to zero.
pub fn hat_cost(g: &StreamingGraph, alloc: &Allocation) -> Result<f64, GraphError> {
    evaluate(g, alloc, false).map(|r| r.total_cost)
}

/// Sufficient condition for being computationally constrained: every edge
/// weight is at most `k · w_min · ⌈D / c⌉`.
pub fn check_comp_constrained_bound(g: &StreamingGraph, c: usize, k: f64) -> bool {
    assert!(c > 0, "resource count must be positive");
    let bound = k * g.min_task_weight() * g.diameter().div_ceil(c) as f64;
    g.edges.iter().all(|e| e.weight <= bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(b: f64) -> StreamingGraph {
        StreamingGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", b)]).unwrap()
    }

    fn alloc(pairs: &[(&str, usize)], c: usize) -> Allocation {
        Allocation::new(pairs.iter().map(|&(t, r)| (t.to_string(), r)).collect(), c).unwrap()
    }

    #[test]
    fn critical_path_survives_huge_node_costs() {
        let g = StreamingGraph::new([("a", 1.0), ("b", 1.0), ("c", 1.0)], [("a", "b", 0.0), ("a", "c", 0.0)]).unwrap();
        let (total, path) = longest_path(&g, &[1e13, 0.3, 0.1], &[0.0, 0.0]);
        assert_eq!(total, 1e13 + 0.3);
        assert_eq!(path, [0, 1]);
    }

    fn k22() -> StreamingGraph {
        StreamingGraph::new(
            [("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)],
            [("a", "c", 0.0), ("a", "d", 0.0), ("b", "c", 0.0), ("b", "d", 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn validation_errors() {
        assert!(StreamingGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", 0.0)]).is_ok());
        let cyc = StreamingGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", 0.0), ("b", "a", 0.0)]);
        assert!(matches!(cyc, Err(GraphError::CycleDetected { .. })));
        let zero = StreamingGraph::new([("a", 0.0)], Vec::<(&str, &str, f64)>::new());
        assert!(matches!(zero, Err(GraphError::NonPositiveNodeWeight(..))));
        let neg = StreamingGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", -1.0)]);
        assert!(matches!(neg, Err(GraphError::NegativeEdgeWeight { .. })));
        let dup = StreamingGraph::new([("a", 1.0), ("a", 2.0)], Vec::<(&str, &str, f64)>::new());
        assert!(matches!(dup, Err(GraphError::DuplicateTask(_))));
        let par = StreamingGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", 0.0), ("a", "b", 1.0)]);
        assert!(matches!(par, Err(GraphError::ParallelEdge { .. })));
        let selfloop = StreamingGraph::new([("a", 1.0)], [("a", "a", 0.0)]);
        assert!(matches!(selfloop, Err(GraphError::SelfLoop(_))));
    }

    #[test]
    fn cycle_error_names_a_cycle_edge() {
        let g = StreamingGraph::new(
            [("s", 1.0), ("a", 1.0), ("b", 1.0), ("c", 1.0)],
            [("s", "a", 0.0), ("a", "b", 0.0), ("b", "c", 0.0), ("c", "a", 0.0)],
        );
        match g {
            Err(GraphError::CycleDetected { from, to }) => {
                assert!(["a", "b", "c"].contains(&from.as_str()));
                assert!(["a", "b", "c"].contains(&to.as_str()));
            }
            other => panic!("expected a cycle, got {other:?}"),
        }
    }

    #[test]
    fn sources_and_sinks() {
        let g = StreamingGraph::new(
            [("a", 1.0), ("b", 1.0), ("c", 1.0)],
            [("a", "b", 0.0), ("b", "c", 0.0)],
        )
        .unwrap();
        assert_eq!(g.sources(), vec!["a"]);
        assert_eq!(g.sinks(), vec!["c"]);

        let iso =
            StreamingGraph::new([("x", 1.0), ("y", 1.0), ("z", 1.0)], Vec::<(&str, &str, f64)>::new())
                .unwrap();
        assert_eq!(iso.sources(), vec!["x", "y", "z"]);
        assert_eq!(iso.sinks(), vec!["x", "y", "z"]);

        let g = k22();
        assert_eq!(g.sources(), vec!["a", "b"]);
        assert_eq!(g.sinks(), vec!["c", "d"]);
    }

    #[test]
    fn processing_cost_examples() {
        let g = StreamingGraph::new([("v", 3.0), ("u", 1.0)], Vec::<(&str, &str, f64)>::new()).unwrap();
        assert_eq!(processing_cost(&g, &alloc(&[("v", 1), ("u", 2)], 2), "v").unwrap(), 3.0);

        let g = StreamingGraph::new(
            [("v", 2.0), ("a", 1.0), ("b", 1.0), ("c", 1.0)],
            Vec::<(&str, &str, f64)>::new(),
        )
        .unwrap();
        let all = alloc(&[("v", 1), ("a", 1), ("b", 1), ("c", 1)], 2);
        assert_eq!(processing_cost(&g, &all, "v").unwrap(), 8.0);
        assert!(matches!(processing_cost(&g, &all, "zz"), Err(GraphError::UnknownTask(_))));

        // twelve parallel tasks, heavy v1 sharing with three unit tasks
        let mut tasks = vec![("v1".to_string(), 4.0)];
        tasks.extend((2..=12).map(|i| (format!("v{i}"), 1.0)));
        let g = StreamingGraph::new(tasks, Vec::<(String, String, f64)>::new()).unwrap();
        let assignment = (1..=12)
            .map(|i| (format!("v{i}"), if i <= 4 { 1 } else { 2 }))
            .collect();
        let a = Allocation::new(assignment, 2).unwrap();
        assert_eq!(processing_cost(&g, &a, "v1").unwrap(), 16.0);
    }

    #[test]
    fn transfer_cost_examples() {
        let g = chain(5.0);
        assert_eq!(transfer_cost(&g, &alloc(&[("a", 1), ("b", 1)], 2), "a", "b").unwrap(), 0.0);
        assert_eq!(transfer_cost(&g, &alloc(&[("a", 1), ("b", 2)], 2), "a", "b").unwrap(), 5.0);
        let g0 = chain(0.0);
        assert_eq!(transfer_cost(&g0, &alloc(&[("a", 1), ("b", 2)], 2), "a", "b").unwrap(), 0.0);
        assert!(matches!(
            transfer_cost(&g, &alloc(&[("a", 1), ("b", 2)], 2), "b", "a"),
            Err(GraphError::UnknownEdge { .. })
        ));
    }

    #[test]
    fn streaming_and_hat_cost_on_chain() {
        let g = chain(5.0);
        let together = alloc(&[("a", 1), ("b", 1)], 2);
        let split = alloc(&[("a", 1), ("b", 2)], 2);
        let r = streaming_cost(&g, &together).unwrap();
        assert_eq!(r.total_cost, 4.0);
        assert_eq!(r.critical_path, vec!["a", "b"]);
        assert_eq!(r.per_resource_load[&1], ResourceLoad { tasks: 2, weight: 2.0 });
        assert_eq!(streaming_cost(&g, &split).unwrap().total_cost, 7.0);
        assert_eq!(hat_cost(&g, &split).unwrap(), 2.0);
        assert_eq!(hat_cost(&g, &together).unwrap(), 4.0);

        let single = StreamingGraph::new([("v", 7.0)], Vec::<(&str, &str, f64)>::new()).unwrap();
        assert_eq!(streaming_cost(&single, &alloc(&[("v", 2)], 3)).unwrap().total_cost, 7.0);
    }

    #[test]
    fn allocation_coverage_is_checked() {
        let g = chain(1.0);
        assert!(matches!(
            streaming_cost(&g, &alloc(&[("a", 1)], 2)),
            Err(GraphError::UncoveredTask(_))
        ));
        assert!(matches!(
            streaming_cost(&g, &alloc(&[("a", 1), ("b", 1), ("q", 1)], 2)),
            Err(GraphError::UnknownTask(_))
        ));
        assert!(matches!(
            Allocation::new([("a".to_string(), 3)].into(), 2),
            Err(GraphError::ResourceOutOfRange { .. })
        ));
    }

    #[test]
    fn critical_path_ties_pick_smallest_ids() {
        let g = StreamingGraph::new(
            [("s", 1.0), ("b", 1.0), ("a", 1.0), ("t", 1.0)],
            [("s", "b", 0.0), ("s", "a", 0.0), ("b", "t", 0.0), ("a", "t", 0.0)],
        )
        .unwrap();
        let r = streaming_cost(&g, &Allocation::single(&g, 1)).unwrap();
        assert_eq!(r.total_cost, 12.0);
        assert_eq!(r.critical_path, vec!["s", "a", "t"]);
    }

    #[test]
    fn diameter_examples() {
        let names: Vec<String> = (0..5).map(|i| format!("n{i}")).collect();
        let g = StreamingGraph::new(
            names.iter().map(|n| (n.as_str(), 1.0)),
            names.windows(2).map(|w| (w[0].as_str(), w[1].as_str(), 0.0)),
        )
        .unwrap();
        assert_eq!(g.diameter(), 5);
        let iso =
            StreamingGraph::new([("x", 1.0), ("y", 1.0), ("z", 1.0)], Vec::<(&str, &str, f64)>::new())
                .unwrap();
        assert_eq!(iso.diameter(), 1);
        assert_eq!(k22().diameter(), 2);
    }

    #[test]
    fn comp_constrained_bound() {
        let names: Vec<String> = (0..10).map(|i| format!("n{i}")).collect();
        let mk = |last: f64| {
            StreamingGraph::new(
                names.iter().map(|n| (n.as_str(), 1.0)),
                names.windows(2).enumerate().map(|(i, w)| {
                    (w[0].as_str(), w[1].as_str(), if i == 8 { last } else { 5.0 })
                }),
            )
            .unwrap()
        };
        assert!(check_comp_constrained_bound(&mk(5.0), 2, 1.0));
        assert!(!check_comp_constrained_bound(&mk(6.0), 2, 1.0));
        assert!(check_comp_constrained_bound(&k22(), 3, 1e-6));
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let g = chain(2.5);
        let text = serde_json::to_string(&g.to_json()).unwrap();
        let back = StreamingGraph::from_json_str(&text).unwrap();
        assert_eq!(back.to_json(), g.to_json());
        let bad = r#"{"nodes":[{"id":"a","w":1,"extra":2}],"edges":[]}"#;
        assert!(matches!(StreamingGraph::from_json_str(bad), Err(GraphError::Json(_))));
        let bad = r#"{"nodes":[],"edges":[],"meta":1}"#;
        assert!(matches!(StreamingGraph::from_json_str(bad), Err(GraphError::Json(_))));
    }
}
