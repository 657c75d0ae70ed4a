//! Series-parallel-decomposable graphs and their decomposition trees.
//!
//! An SPD graph is built from single tasks by serial composition (every sink
//! of the left part feeds every source of the right part) and parallel
//! composition (disjoint union). [`SpdTree`] records that construction in
//! k-ary form; [`expand`] replays it to obtain the [`StreamingGraph`].

mod dsl;
mod tree;

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{Edge, GraphError, StreamingGraph, Task};

pub use dsl::{parse_tree, serialize_tree};
pub use tree::{Inner, Leaf, Op, SpdTree, TreeJson};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpdError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("duplicate leaf id {0}")]
    DuplicateLeafId(String),
    #[error("inner node needs at least two children, got {0}")]
    Arity(usize),
    #[error("leaf {0} has non-positive weight {1}")]
    LeafWeight(String, f64),
    #[error("serial edge weight must be non-negative, got {0}")]
    EdgeWeight(f64),
    #[error("leaf id {0:?} is not a valid identifier")]
    BadId(String),
    #[error("task id {0} occurs in both graphs")]
    IdCollision(String),
    #[error("invalid tree json: {0}")]
    Json(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `g1 ∘s g2`: the union of both graphs plus an edge of weight `b` from every
/// sink of `g1` to every source of `g2`.
pub fn compose_serial(
    g1: &StreamingGraph,
    g2: &StreamingGraph,
    b: f64,
) -> Result<StreamingGraph, SpdError> {
    let sinks: Vec<usize> = (0..g1.len()).filter(|&v| g1.is_sink(v)).collect();
    let offset = g1.len();
    let sources: Vec<usize> = (0..g2.len()).filter(|&v| g2.is_source(v)).map(|v| v + offset).collect();
    let extra = sinks.iter().flat_map(|&u| sources.iter().map(move |&v| Edge { from: u, to: v, weight: b }));
    union(g1, g2, extra.collect())
}

/// `g1 ∘p g2`: the disjoint union of both graphs.
pub fn compose_parallel(g1: &StreamingGraph, g2: &StreamingGraph) -> Result<StreamingGraph, SpdError> {
    union(g1, g2, Vec::new())
}

fn union(g1: &StreamingGraph, g2: &StreamingGraph, extra: Vec<Edge>) -> Result<StreamingGraph, SpdError> {
    let mut tasks: Vec<Task> = g1.tasks().to_vec();
    let mut index: HashMap<String, usize> = tasks.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();
    for t in g2.tasks() {
        if index.insert(t.id.clone(), tasks.len()).is_some() {
            return Err(SpdError::IdCollision(t.id.clone()));
        }
        tasks.push(t.clone());
    }
    let offset = g1.len();
    let mut edges: Vec<Edge> = g1.edges().to_vec();
    edges.extend(g2.edges().iter().map(|e| Edge { from: e.from + offset, to: e.to + offset, weight: e.weight }));
    edges.extend(extra);
    Ok(StreamingGraph::from_parts(tasks, edges, index)?)
}

/// Builds the SPD graph described by `tree`.
///
/// Tasks appear in left-to-right leaf order. A k-ary serial node composes its
/// children left to right, so only consecutive children are wired together.
/// Runs in time linear in the size of the output graph.
pub fn expand(tree: &SpdTree) -> StreamingGraph {
    let mut tasks = Vec::with_capacity(tree.leaf_count());
    let mut edges = Vec::new();
    build(tree, &mut tasks, &mut edges);
    let index = tasks.iter().enumerate().map(|(i, t): (usize, &Task)| (t.id.clone(), i)).collect();
    StreamingGraph::from_parts(tasks, edges, index).expect("a valid SPD tree expands to a valid DAG")
}

/// Appends the subtree's tasks and edges; returns its (sources, sinks).
fn build(tree: &SpdTree, tasks: &mut Vec<Task>, edges: &mut Vec<Edge>) -> (Vec<usize>, Vec<usize>) {
    match tree {
        SpdTree::Leaf(leaf) => {
            let v = tasks.len();
            tasks.push(Task { id: leaf.id().to_string(), weight: leaf.weight() });
            (vec![v], vec![v])
        }
        SpdTree::Inner(inner) => {
            let parts: Vec<_> = inner.children().iter().map(|c| build(c, tasks, edges)).collect();
            match inner.op() {
                Op::Parallel => {
                    let mut sources = Vec::new();
                    let mut sinks = Vec::new();
                    for (s, t) in parts {
                        sources.extend(s);
                        sinks.extend(t);
                    }
                    (sources, sinks)
                }
                Op::Serial => {
                    let b = inner.edge_weight();
                    for pair in parts.windows(2) {
                        for &u in &pair[0].1 {
                            for &v in &pair[1].0 {
                                edges.push(Edge { from: u, to: v, weight: b });
                            }
                        }
                    }
                    let mut parts = parts.into_iter();
                    let first = parts.next().expect("inner nodes have children");
                    let last = parts.last().expect("inner nodes have at least two children");
                    (first.0, last.1)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StreamingGraph;

    fn single(id: &str) -> StreamingGraph {
        StreamingGraph::new([(id, 1.0)], Vec::<(&str, &str, f64)>::new()).unwrap()
    }

    fn edge_set(g: &StreamingGraph) -> Vec<(String, String, f64)> {
        let mut e: Vec<_> = g
            .edges()
            .iter()
            .map(|e| (g.task(e.from).id.clone(), g.task(e.to).id.clone(), e.weight))
            .collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn serial_of_two_singles_is_a_chain() {
        let g = compose_serial(&single("a"), &single("b"), 2.5).unwrap();
        assert_eq!(edge_set(&g), vec![("a".into(), "b".into(), 2.5)]);
    }

    #[test]
    fn serial_of_two_parallel_pairs_is_k22() {
        let left = compose_parallel(&single("a"), &single("b")).unwrap();
        let right = compose_parallel(&single("c"), &single("d")).unwrap();
        let g = compose_serial(&left, &right, 0.0).unwrap();
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.sources(), vec!["a", "b"]);
        assert_eq!(g.sinks(), vec!["c", "d"]);
    }

    #[test]
    fn chain_then_single() {
        let chain = compose_serial(&single("a"), &single("b"), 1.0).unwrap();
        let g = compose_serial(&chain, &single("c"), 1.0).unwrap();
        let pairs: Vec<_> = edge_set(&g).into_iter().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(pairs, vec![("a".into(), "b".into()), ("b".into(), "c".into())]);
    }

    #[test]
    fn parallel_composition() {
        let g = compose_parallel(&single("a"), &single("b")).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.edges().is_empty());

        let left = compose_parallel(&single("a"), &single("b")).unwrap();
        let right = compose_parallel(&single("c"), &single("d")).unwrap();
        let k22 = compose_serial(&left, &right, 0.0).unwrap();
        let g = compose_parallel(&k22, &single("e")).unwrap();
        assert_eq!((g.len(), g.edges().len()), (5, 4));
        assert_eq!(g.sources(), vec!["a", "b", "e"]);
        assert_eq!(g.sinks(), vec!["c", "d", "e"]);
    }

    #[test]
    fn id_collision() {
        assert!(matches!(compose_parallel(&single("a"), &single("a")), Err(SpdError::IdCollision(_))));
        assert!(matches!(compose_serial(&single("a"), &single("a"), 0.0), Err(SpdError::IdCollision(_))));
    }

    #[test]
    fn expand_examples() {
        let g = expand(&parse_tree("p(a:1, b:1)").unwrap());
        assert_eq!((g.len(), g.edges().len()), (2, 0));

        let g = expand(&parse_tree("s(a:1, p(b:1, c:1), d:1)").unwrap());
        let pairs: Vec<_> = edge_set(&g).into_iter().map(|(u, v, _)| (u, v)).collect();
        let expect: Vec<(String, String)> =
            [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")].iter().map(|&(u, v)| (u.into(), v.into())).collect();
        assert_eq!(pairs, expect);

        let g = expand(&parse_tree("s(p(a:1,b:1), p(c:1,d:1))[b=3]").unwrap());
        assert_eq!(g.edges().len(), 4);
        assert!(g.edges().iter().all(|e| e.weight == 3.0));
    }

    #[test]
    fn expand_matches_pairwise_composition() {
        let t = parse_tree("s(a:1, p(b:2, s(c:1, d:1)[b=4]), e:3)[b=2]").unwrap();
        let cd = compose_serial(&single("c"), &single("d"), 4.0).unwrap();
        let mid = compose_parallel(&StreamingGraph::new([("b", 2.0)], Vec::<(&str, &str, f64)>::new()).unwrap(), &cd).unwrap();
        let left = compose_serial(&single("a"), &mid, 2.0).unwrap();
        let e = StreamingGraph::new([("e", 3.0)], Vec::<(&str, &str, f64)>::new()).unwrap();
        let g = compose_serial(&left, &e, 2.0).unwrap();
        assert_eq!(edge_set(&expand(&t)), edge_set(&g));
    }
}
