use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use spd_alloc::baselines::{balanced_avg, greedy_collocate, trivial_single, GreedyPolicy};
use spd_alloc::continuous::{continuous_cost, solve as solve_cont};
use spd_alloc::discrete::{allocate, approximation_diagnostics, DEFAULT_GAMMA};
use spd_alloc::graph::{streaming_cost, Allocation, StreamingGraph};
use spd_alloc::instances::{gen_greedy_worstcase, gen_parallel_outlier, gen_random_spd, RandomSpdParams};
use spd_alloc::oracle::{brute_force_optimal_with, OracleConfig};
use spd_alloc::spd::{expand, SpdTree};

use crate::write_output;

pub const CSV_HEADER: &str = "suite,instance,n,c,seed,algorithm,d,delta,ratio,bound_ok,runtime_ms";

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Parallel-outlier family with c = 2: trivial, avg, disc and the oracle where feasible.
    AvgCounterexample,
    /// Random zero-transfer trees: disc against the capped bound.
    DiscRatio,
    /// Reconstructed greedy worst case: the three greedy policies, disc and the repaired allocation.
    GreedyWorst,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Instance sizes; an empty list yields a header-only CSV.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    sizes: Vec<usize>,
    /// Seeds for random suites.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    /// Resource counts for the disc-ratio suite.
    #[arg(long = "c", value_delimiter = ',', default_value = "2,4,8")]
    cs: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

struct Job {
    n: usize,
    c: usize,
    seed: Option<u64>,
}

struct Row {
    instance: String,
    n: usize,
    c: usize,
    seed: Option<u64>,
    algorithm: String,
    d: f64,
    delta: f64,
    bound_ok: Option<bool>,
    runtime_ms: f64,
}

pub fn cmd_bench(a: BenchArgs) -> Result<()> {
    let jobs: Vec<Job> = match a.suite {
        Suite::AvgCounterexample | Suite::GreedyWorst => a.sizes.iter().map(|&n| Job { n, c: 0, seed: None }).collect(),
        Suite::DiscRatio => a
            .sizes
            .iter()
            .flat_map(|&n| {
                let seeds = &a.seeds;
                a.cs.iter().flat_map(move |&c| seeds.iter().map(move |&s| Job { n, c, seed: Some(s) }))
            })
            .collect(),
    };
    let results: Vec<Result<Vec<Row>>> = jobs.par_iter().map(|job| run_job(a.suite, job, a.gamma)).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|x, y| {
        (x.n, x.c, x.seed, &x.instance, &x.algorithm).cmp(&(y.n, y.c, y.seed, &y.instance, &y.algorithm))
    });

    let suite = a.suite.to_possible_value().expect("named suite").get_name().to_string();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in rows {
        csv += &format!(
            "{suite},{},{},{},{},{},{},{},{},{},{:.3}\n",
            r.instance,
            r.n,
            r.c,
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.algorithm,
            r.d,
            r.delta,
            r.d / r.delta,
            r.bound_ok.map(|b| b.to_string()).unwrap_or_default(),
            r.runtime_ms
        );
    }
    write_output(a.out.as_ref(), &csv)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed().as_secs_f64() * 1e3))
}

fn delta_of(t: &SpdTree, c: usize) -> Result<f64> {
    Ok(continuous_cost(t, &solve_cont(t, c as f64)?)?.total_cost)
}

fn run_job(suite: Suite, job: &Job, gamma: f64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut push = |instance: &str, c: usize, algorithm: &str, d: f64, delta: f64, bound_ok, ms| {
        rows.push(Row {
            instance: instance.to_string(),
            n: job.n,
            c,
            seed: job.seed,
            algorithm: algorithm.to_string(),
            d,
            delta,
            bound_ok,
            runtime_ms: ms,
        })
    };
    match suite {
        Suite::AvgCounterexample => {
            let c = 2;
            let t = gen_parallel_outlier(job.n)?;
            let g = expand(&t);
            let name = format!("parallel-outlier-n{}", job.n);
            let delta = delta_of(&t, c)?;
            let (d, ms) = timed(|| Ok(cost(&g, &trivial_single(&g))))?;
            push(&name, c, "trivial", d, delta, None, ms);
            let (d, ms) = timed(|| Ok(cost(&g, &balanced_avg(&g, c))))?;
            push(&name, c, "avg", d, delta, None, ms);
            let (d, ms) = timed(|| Ok(cost(&g, &allocate(&t, c, gamma)?.allocation)))?;
            push(&name, c, "disc", d, delta, None, ms);
            let config = OracleConfig::from_env();
            if g.len() <= config.max_n(c) {
                let (d, ms) = timed(|| Ok(brute_force_optimal_with(&g, c, &config)?.1))?;
                push(&name, c, "oracle", d, delta, None, ms);
            }
        }
        Suite::DiscRatio => {
            let seed = job.seed.expect("random jobs carry a seed");
            let params = RandomSpdParams { n_leaves: job.n, ..RandomSpdParams::default() };
            let t = gen_random_spd(&params, seed)?;
            let name = format!("random-n{}-s{seed}", job.n);
            let delta = delta_of(&t, job.c)?;
            let (report, ms) = timed(|| Ok(allocate(&t, job.c, gamma)?))?;
            let diag = approximation_diagnostics(&t, job.c, &report)?;
            let ok = (!diag.overflow).then(|| diag.d <= diag.bound * diag.delta * (1.0 + 1e-12));
            push(&name, job.c, "disc", diag.d, delta, ok, ms);
        }
        Suite::GreedyWorst => {
            let inst = gen_greedy_worstcase(job.n)?;
            let c = inst.resources;
            let name = format!("greedy-worst-n{}", job.n);
            let delta = delta_of(&inst.tree, c)?;
            for (label, policy) in [
                ("greedy-improve", GreedyPolicy::RetainIfImproves),
                ("greedy-keep", GreedyPolicy::RetainUnlessWorse),
                ("greedy-path", GreedyPolicy::RetainUnlessPathWorse),
            ] {
                let (d, ms) = timed(|| Ok(greedy_collocate(&inst.tree, c, policy, gamma)?.cost))?;
                push(&name, c, label, d, delta, None, ms);
            }
            let (d, ms) = timed(|| Ok(cost(&inst.graph, &allocate(&inst.tree, c, gamma)?.allocation)))?;
            push(&name, c, "disc", d, delta, None, ms);
            push(&name, c, "repaired", cost(&inst.graph, &inst.repaired_allocation), delta, None, 0.0);
        }
    }
    Ok(rows)
}

fn cost(g: &StreamingGraph, a: &Allocation) -> f64 {
    streaming_cost(g, a).expect("allocation covers the graph").total_cost
}
