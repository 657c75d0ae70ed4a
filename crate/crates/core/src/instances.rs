//! Instance generators: the structured families used in the hardness and
//! worst-case arguments, plus seeded random SPD trees.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Allocation, StreamingGraph};
use crate::spd::{expand, SpdTree};

/// Node weight standing in for zero on the fork nodes of the subset-sum graph.
pub const FORK_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("invalid n = {0}: {1}")]
    BadN(usize, &'static str),
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

fn leaf(id: String, w: f64) -> SpdTree {
    SpdTree::leaf(id, w).expect("generated ids and weights are valid")
}

fn serial(children: Vec<SpdTree>, b: f64) -> SpdTree {
    SpdTree::serial(children, b).expect("generated trees are valid")
}

fn parallel(children: Vec<SpdTree>) -> SpdTree {
    SpdTree::parallel(children).expect("generated trees are valid")
}

/// `n` parallel tasks `v1..vn`; `v1` weighs `n/3`, all others 1.
pub fn gen_parallel_outlier(n: usize) -> Result<SpdTree, InstanceError> {
    if n < 3 || n % 3 != 0 {
        return Err(InstanceError::BadN(n, "must be a positive multiple of 3"));
    }
    let leaves = (1..=n).map(|i| leaf(format!("v{i}"), if i == 1 { (n / 3) as f64 } else { 1.0 })).collect();
    Ok(parallel(leaves))
}

/// `p(G_1, …, G_k)` with `G_i = s(p(s_i unit tasks), p(s_i unit tasks))` and
/// unit edge weights. Singleton groups collapse to a bare task, and so does
/// the outer composition for a single component.
pub fn gen_partition_reduction(set: &[u64]) -> Result<SpdTree, InstanceError> {
    if set.is_empty() || set.contains(&0) {
        return Err(InstanceError::BadParams("the multiset needs positive elements".into()));
    }
    let group = |prefix: &str, i: usize, s: u64| {
        let mut leaves: Vec<SpdTree> = (1..=s).map(|j| leaf(format!("{prefix}{i}_{j}"), 1.0)).collect();
        if leaves.len() == 1 { leaves.pop().unwrap() } else { parallel(leaves) }
    };
    let mut parts: Vec<SpdTree> = set
        .iter()
        .enumerate()
        .map(|(k, &s)| serial(vec![group("a", k + 1, s), group("b", k + 1, s)], 1.0))
        .collect();
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { parallel(parts) })
}

/// Two chains `u1 v1 u2 v2 …` and `up1 vp1 up2 vp2 …` whose aligned nodes feed
/// the fork tasks `nu_i` (from `u_i`, `up_i`) and `nup_i` (from `v_i`, `vp_i`).
///
/// With `n = |S|` and `w = Σ S`: path tasks weigh `w`, fork tasks weigh
/// [`FORK_EPSILON`], `b(u_i, v_i) = s_i`, `b(up_i, vp_i) = 2x/k − s_i`, chain
/// links between consecutive pairs are free and every fork edge weighs
/// `12nw + x`. The intended resource count is `n + k`.
pub fn gen_subsetsum_reduction(set: &[u64], x: u64, k: usize) -> Result<StreamingGraph, InstanceError> {
    let n = set.len();
    if n == 0 || set.contains(&0) {
        return Err(InstanceError::BadParams("the multiset needs positive elements".into()));
    }
    if k == 0 || k > n {
        return Err(InstanceError::BadParams(format!("k = {k} must lie in 1..={n}")));
    }
    let max = *set.iter().max().unwrap();
    if x < max {
        return Err(InstanceError::BadParams(format!("x = {x} must be at least max(S) = {max}")));
    }
    let w: u64 = set.iter().sum();
    let target = 2.0 * x as f64 / k as f64;
    if let Some(&s) = set.iter().find(|&&s| (s as f64) > target) {
        return Err(InstanceError::BadParams(format!("2x/k = {target} is below s = {s}")));
    }
    let fork = (12 * n as u64 * w + x) as f64;
    let mut tasks = Vec::with_capacity(6 * n);
    let mut edges = Vec::with_capacity(7 * n);
    for (i, &s) in set.iter().enumerate() {
        let i1 = i + 1;
        let [u, v, up, vp, nu, nup] =
            ["u", "v", "up", "vp", "nu", "nup"].map(|p| format!("{p}{i1}"));
        for id in [&u, &v, &up, &vp] {
            tasks.push((id.clone(), w as f64));
        }
        tasks.push((nu.clone(), FORK_EPSILON));
        tasks.push((nup.clone(), FORK_EPSILON));
        edges.push((u.clone(), v.clone(), s as f64));
        edges.push((up.clone(), vp.clone(), target - s as f64));
        edges.push((u.clone(), nu.clone(), fork));
        edges.push((up.clone(), nu, fork));
        edges.push((v.clone(), nup.clone(), fork));
        edges.push((vp.clone(), nup, fork));
        if i1 < n {
            edges.push((v, format!("u{}", i1 + 1), 0.0));
            edges.push((vp, format!("up{}", i1 + 1), 0.0));
        }
    }
    Ok(StreamingGraph::new(tasks, edges).expect("the construction is a DAG"))
}

/// Reconstructed worst case for the greedy collocation strategy.
#[derive(Debug, Clone)]
pub struct GreedyWorstCase {
    pub tree: SpdTree,
    pub graph: StreamingGraph,
    pub resources: usize,
    /// Optimal allocation when transfers are ignored.
    pub box_allocation: Allocation,
    /// The box allocation with the heavy path edges collocated instead.
    pub repaired_allocation: Allocation,
    pub metadata: BTreeMap<String, String>,
}

/// A path `v1 … v_{n/2}` and a fan `v1 → x → u1 → u_i`, `c = n/4 + 2`.
///
/// Tree: `s(v1, p(s(s(v2,v3)[2n], …, s(v_{n/2-2},v_{n/2-1})[2n], v_{n/2})[1],
/// s(s(x,u1)[2n+1], p(u2, …, u_{n/2-1}))[2n+2]))[1]` with `w(v) = 2`,
/// `w(x) = n − 3` and `w(u) = 1`. Under the box allocation
/// `{v1,v2}, {v3,v4}, …, {x}, {u1, …}` the path and the fan cost `2n` and
/// `2n − 1` without transfers.
pub fn gen_greedy_worstcase(n: usize) -> Result<GreedyWorstCase, InstanceError> {
    if n < 12 || n % 4 != 0 {
        return Err(InstanceError::BadN(n, "must be a multiple of 4 and at least 12"));
    }
    let h = n / 2;
    let nf = n as f64;
    let v = |i: usize| leaf(format!("v{i}"), 2.0);
    let u = |i: usize| leaf(format!("u{i}"), 1.0);

    let mut path: Vec<SpdTree> = (2..h).step_by(2).map(|i| serial(vec![v(i), v(i + 1)], 2.0 * nf)).collect();
    path.push(v(h));
    let fan = serial(
        vec![serial(vec![leaf("x".into(), nf - 3.0), u(1)], 2.0 * nf + 1.0), parallel((2..h).map(u).collect())],
        2.0 * nf + 2.0,
    );
    let tree = serial(vec![v(1), parallel(vec![serial(path, 1.0), fan])], 1.0);
    let graph = expand(&tree);
    let resources = n / 4 + 2;

    let mut boxes: BTreeMap<String, usize> = BTreeMap::new();
    let mut repaired: BTreeMap<String, usize> = BTreeMap::new();
    for i in 1..=h {
        boxes.insert(format!("v{i}"), i.div_ceil(2));
        repaired.insert(format!("v{i}"), i / 2 + 1);
    }
    let (x_box, u_box) = (n / 4 + 1, n / 4 + 2);
    boxes.insert("x".into(), x_box);
    repaired.insert("x".into(), n / 4 + 1);
    for i in 1..h {
        boxes.insert(format!("u{i}"), u_box);
        repaired.insert(format!("u{i}"), u_box);
    }
    let box_allocation = Allocation::new(boxes, resources).expect("indices within c");
    let repaired_allocation = Allocation::new(repaired, resources).expect("indices within c");

    let metadata = [
        ("family", "greedy-worst".to_string()),
        ("status", "reconstructed".to_string()),
        ("n", n.to_string()),
        ("c", resources.to_string()),
        ("weights", format!("w(v_i)=2, w(x)={}, w(u_i)=1", n - 3)),
        (
            "edges",
            format!(
                "b(v_2i,v_2i+1)={}, other path edges 1, b(v1,x)=1, b(x,u1)={}, b(u1,u_i)={}",
                2 * n,
                2 * n + 1,
                2 * n + 2
            ),
        ),
        ("boxes", "{v1,v2},{v3,v4},...,{x},{u1..}".to_string()),
        ("repaired", "{v1},{v2,v3},...,{v_n/2,x},{u1..}".to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();

    Ok(GreedyWorstCase { tree, graph, resources, box_allocation, repaired_allocation, metadata })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpdParams {
    pub n_leaves: usize,
    pub p_serial: f64,
    pub max_fanout: usize,
    pub weight_range: (f64, f64),
    pub edge_weight_range: (f64, f64),
}

impl Default for RandomSpdParams {
    fn default() -> Self {
        Self { n_leaves: 8, p_serial: 0.5, max_fanout: 3, weight_range: (1.0, 10.0), edge_weight_range: (0.0, 0.0) }
    }
}

/// Random SPD tree with exactly `n_leaves` leaves `t1, t2, …` (zero padded).
///
/// Each inner node picks its composition with probability `p_serial`, an
/// arity in `2..=max_fanout` and a uniformly random composition of its leaf
/// count. Weights are drawn uniformly and rounded to two decimals.
pub fn gen_random_spd(params: &RandomSpdParams, seed: u64) -> Result<SpdTree, InstanceError> {
    let RandomSpdParams { n_leaves, p_serial, max_fanout, weight_range: (wl, wh), edge_weight_range: (bl, bh) } =
        *params;
    if n_leaves == 0 {
        return Err(InstanceError::BadParams("n_leaves must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p_serial) {
        return Err(InstanceError::BadParams(format!("p_serial = {p_serial} is not a probability")));
    }
    if max_fanout < 2 {
        return Err(InstanceError::BadParams("max_fanout must be at least 2".into()));
    }
    if !(wl > 0.0 && wl <= wh && wh.is_finite()) {
        return Err(InstanceError::BadParams(format!("bad weight range [{wl}, {wh}]")));
    }
    if !(bl >= 0.0 && bl <= bh && bh.is_finite()) {
        return Err(InstanceError::BadParams(format!("bad edge weight range [{bl}, {bh}]")));
    }
    let mut g = RandomTree {
        rng: ChaCha8Rng::seed_from_u64(seed),
        params: *params,
        width: n_leaves.to_string().len(),
        next: 1,
    };
    Ok(g.build(n_leaves))
}

struct RandomTree {
    rng: ChaCha8Rng,
    params: RandomSpdParams,
    width: usize,
    next: usize,
}

impl RandomTree {
    fn draw(&mut self, (lo, hi): (f64, f64)) -> f64 {
        let x = if lo == hi { lo } else { self.rng.random_range(lo..=hi) };
        ((x * 100.0).round() / 100.0).clamp(lo, hi)
    }

    fn build(&mut self, n: usize) -> SpdTree {
        if n == 1 {
            let id = format!("t{:0width$}", self.next, width = self.width);
            self.next += 1;
            let w = self.draw(self.params.weight_range);
            return leaf(id, w);
        }
        let is_serial = self.rng.random_bool(self.params.p_serial);
        let arity = self.rng.random_range(2..=self.params.max_fanout.min(n));
        let mut cuts = sample(&mut self.rng, n - 1, arity - 1).into_vec();
        cuts.sort_unstable();
        let mut sizes = Vec::with_capacity(arity);
        let mut prev = 0;
        for c in cuts.into_iter().map(|c| c + 1).chain([n]) {
            sizes.push(c - prev);
            prev = c;
        }
        let b = if is_serial { self.draw(self.params.edge_weight_range) } else { 0.0 };
        let children = sizes.into_iter().map(|k| self.build(k)).collect();
        if is_serial { serial(children, b) } else { parallel(children) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{hat_cost, streaming_cost};

    #[test]
    fn parallel_outlier() {
        let t = gen_parallel_outlier(12).unwrap();
        let w: Vec<f64> = t.leaves().iter().map(|l| l.weight()).collect();
        assert_eq!(w.len(), 12);
        assert_eq!(w[0], 4.0);
        assert!(w[1..].iter().all(|&x| x == 1.0));
        let t = gen_parallel_outlier(3).unwrap();
        assert!(t.leaves().iter().all(|l| l.weight() == 1.0));
        assert!(gen_parallel_outlier(10).is_err());
        assert!(gen_parallel_outlier(0).is_err());
    }

    #[test]
    fn partition_reduction_counts() {
        let t = gen_partition_reduction(&[1]).unwrap();
        assert_eq!(crate::spd::serialize_tree(&t), "s(a1_1:1, b1_1:1)[b=1]");
        for set in [vec![1, 2, 3], vec![2, 2], vec![4, 1, 1, 3]] {
            let t = gen_partition_reduction(&set).unwrap();
            let g = expand(&t);
            let sum: u64 = set.iter().sum();
            let sq: u64 = set.iter().map(|s| s * s).sum();
            assert_eq!(g.len() as u64, 2 * sum);
            assert_eq!(g.edges().len() as u64, sq);
            assert!(g.edges().iter().all(|e| e.weight == 1.0));
        }
    }

    #[test]
    fn subsetsum_weights() {
        let g = gen_subsetsum_reduction(&[1, 2], 3, 2).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.edge_weight("u1", "nu1"), Some(75.0));
        assert_eq!(g.edge_weight("vp2", "nup2"), Some(75.0));
        assert_eq!(g.edge_weight("u2", "v2"), Some(2.0));
        assert_eq!(g.edge_weight("up1", "vp1"), Some(2.0));
        assert_eq!(g.edge_weight("v1", "u2"), Some(0.0));
        assert_eq!(g.task(g.index_of("nu1").unwrap()).weight, FORK_EPSILON);
        assert_eq!(g.task(g.index_of("u1").unwrap()).weight, 3.0);

        let g = gen_subsetsum_reduction(&[1, 2, 3], 3, 1).unwrap();
        for (i, s) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            assert_eq!(g.edge_weight(&format!("up{}", i + 1), &format!("vp{}", i + 1)), Some(6.0 - s));
        }
        assert!(gen_subsetsum_reduction(&[1, 2], 3, 3).is_err());
        assert!(gen_subsetsum_reduction(&[1, 5], 3, 1).is_err());
        assert!(gen_subsetsum_reduction(&[3, 3], 3, 2).is_ok());
        assert!(gen_subsetsum_reduction(&[1, 3], 3, 2).is_ok());
        assert!(gen_subsetsum_reduction(&[1, 3, 3], 3, 3).is_err());
    }

    #[test]
    fn greedy_worstcase_box_quantities() {
        for n in [12, 16, 20, 24] {
            let inst = gen_greedy_worstcase(n).unwrap();
            let g = &inst.graph;
            assert_eq!(g.len(), n);
            assert_eq!(inst.resources, n / 4 + 2);
            assert_eq!(inst.box_allocation.resources_used(), n / 4 + 2);
            assert_eq!(hat_cost(g, &inst.box_allocation).unwrap(), 2.0 * n as f64);
            // the fan alone: v1, x, u1, u_i
            let fan: f64 = ["v1", "x", "u1", "u2"]
                .iter()
                .map(|id| crate::graph::processing_cost(g, &inst.box_allocation, id).unwrap())
                .sum();
            assert_eq!(fan, 2.0 * n as f64 - 1.0);
            let nf = n as f64;
            assert_eq!(streaming_cost(g, &inst.box_allocation).unwrap().total_cost, nf * nf / 2.0);
            assert_eq!(streaming_cost(g, &inst.repaired_allocation).unwrap().total_cost, 5.0 * nf - 4.0);
            assert_eq!(inst.metadata["status"], "reconstructed");
        }
        assert!(gen_greedy_worstcase(8).is_err());
        assert!(gen_greedy_worstcase(14).is_err());
    }

    #[test]
    fn random_trees() {
        let p = RandomSpdParams::default();
        assert_eq!(gen_random_spd(&p, 7).unwrap().leaf_count(), 8);
        assert_eq!(gen_random_spd(&p, 7).unwrap(), gen_random_spd(&p, 7).unwrap());
        let one = RandomSpdParams { n_leaves: 1, ..p };
        assert!(gen_random_spd(&one, 3).unwrap().is_leaf());
        let big = RandomSpdParams { n_leaves: 40, edge_weight_range: (0.0, 5.0), ..p };
        for seed in 0..20 {
            let t = gen_random_spd(&big, seed).unwrap();
            assert_eq!(t.leaf_count(), 40);
            assert!(t.leaves().iter().all(|l| (1.0..=10.0).contains(&l.weight())));
            assert_eq!(t.leaves()[0].id(), "t01");
        }
        assert!(gen_random_spd(&RandomSpdParams { n_leaves: 0, ..p }, 0).is_err());
    }
}
