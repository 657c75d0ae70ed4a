//! Fixed benchmark inputs shared by the criterion benches and their smoke test.

use spd_alloc::instances::{gen_random_spd, RandomSpdParams};
use spd_alloc::spd::SpdTree;
use spd_alloc::{Allocation, StreamingGraph};

/// Random tree with `n` leaves; transfers in `[0, 5)` when `edges` is set.
pub fn random_tree(n: usize, seed: u64, edges: bool) -> SpdTree {
    let params = RandomSpdParams {
        n_leaves: n,
        edge_weight_range: if edges { (0.0, 5.0) } else { (0.0, 0.0) },
        ..RandomSpdParams::default()
    };
    gen_random_spd(&params, seed).expect("valid parameters")
}

/// Round-robin allocation of the tasks in graph order.
pub fn round_robin(g: &StreamingGraph, c: usize) -> Allocation {
    let dense: Vec<usize> = (0..g.len()).map(|i| i % c).collect();
    Allocation::from_dense(g, &dense, c)
}
