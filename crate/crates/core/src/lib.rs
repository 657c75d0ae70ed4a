//! Allocation of streaming task graphs to computational resources.
//!
//! A streaming application is a DAG of tasks that every data item passes
//! through. Tasks are mapped to `c` identical resources; a resource shared by
//! `n` tasks serves each of them at `1/n` of its speed, and every edge whose
//! endpoints sit on different resources pays its transfer cost. The cost of an
//! allocation is its costliest source-to-sink path.
//!
//! * [`graph`]: task graphs, allocations and the cost model.
//! * [`spd`]: series-parallel-decomposable graphs and their trees.
//! * [`continuous`]: the exact continuous relaxation on SPD trees.
//! * [`discrete`]: rounding continuous shares into an allocation.
//! * [`baselines`]: simple allocators used for comparison.
//! * [`oracle`]: exhaustive and numeric reference solvers for small inputs.
//! * [`instances`]: generators for random and structured inputs.

pub mod baselines;
pub mod continuous;
pub mod discrete;
pub mod graph;
pub mod instances;
pub mod oracle;
pub mod spd;

pub use continuous::{CappedResult, ShareAssignment};

pub use graph::{Allocation, CostReport, GraphError, StreamingGraph};
pub use spd::{expand, parse_tree, serialize_tree, SpdError, SpdTree};
