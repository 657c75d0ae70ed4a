mod bench;
mod input;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use spd_alloc::baselines::{balanced_avg, greedy_collocate, trivial_single, GreedyPolicy};
use spd_alloc::continuous::{continuous_cost, solve as solve_cont};
use spd_alloc::discrete::{allocate, DEFAULT_GAMMA};
use spd_alloc::graph::{hat_cost, streaming_cost, Allocation, StreamingGraph};
use spd_alloc::instances::{
    gen_greedy_worstcase, gen_parallel_outlier, gen_partition_reduction, gen_random_spd, gen_subsetsum_reduction,
    RandomSpdParams,
};
use spd_alloc::oracle::{brute_force_optimal_with, OracleConfig, OracleError};
use spd_alloc::spd::{serialize_tree, SpdTree};

use input::Instance;

#[derive(Parser)]
#[command(name = "spd-alloc", version, about = "Allocate streaming task graphs to resources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance.
    Gen(GenArgs),
    /// Run one algorithm on an instance.
    Solve(SolveArgs),
    /// Evaluate a given allocation.
    Eval(EvalArgs),
    /// Run several algorithms on one instance side by side.
    Compare(CompareArgs),
    /// Run a benchmark suite and write CSV.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    ParallelOutlier,
    Partition,
    Subsetsum,
    GreedyWorst,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
    Dsl,
}

#[derive(Args)]
struct GenArgs {
    family: Family,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated multiset, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',')]
    set: Vec<u64>,
    #[arg(long)]
    x: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    p_serial: f64,
    #[arg(long, default_value_t = 3)]
    max_fanout: usize,
    #[arg(long, default_value_t = 1.0)]
    w_min: f64,
    #[arg(long, default_value_t = 10.0)]
    w_max: f64,
    #[arg(long, default_value_t = 0.0)]
    b_min: f64,
    #[arg(long, default_value_t = 0.0)]
    b_max: f64,
    /// Tree output as `dsl` (default) or `json`; graphs are always JSON.
    #[arg(long, value_enum, default_value_t = Format::Dsl)]
    format: Format,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Algorithm {
    Cont,
    Disc,
    Trivial,
    Avg,
    GreedyImprove,
    GreedyKeep,
    GreedyPath,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Cont => "cont",
            Algorithm::Disc => "disc",
            Algorithm::Trivial => "trivial",
            Algorithm::Avg => "avg",
            Algorithm::GreedyImprove => "greedy-improve",
            Algorithm::GreedyKeep => "greedy-keep",
            Algorithm::GreedyPath => "greedy-path",
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Tree DSL, tree JSON or graph JSON; `-` reads stdin.
    #[arg(short, long)]
    input: String,
    #[arg(long)]
    c: f64,
    #[arg(long, value_enum)]
    alg: Algorithm,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(short, long)]
    input: String,
    /// JSON object mapping task ids to resources, or a solve report.
    #[arg(short, long)]
    allocation: PathBuf,
    /// Resource count; defaults to the largest index used.
    #[arg(long)]
    c: Option<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(short, long)]
    input: String,
    #[arg(long)]
    c: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "trivial,avg,disc")]
    algs: Vec<Algorithm>,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    /// Add the exhaustive optimum.
    #[arg(long)]
    oracle: bool,
    /// Largest task count for the oracle (overrides SPD_ORACLE_MAX_N).
    #[arg(long)]
    oracle_max_n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Marks errors that should exit with status 3.
#[derive(Debug)]
struct LimitExceeded(String);

impl std::fmt::Display for LimitExceeded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for LimitExceeded {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Bench(a) => bench::cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<LimitExceeded>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

pub(crate) fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub(crate) fn canonical_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let need_n = || a.n.ok_or_else(|| anyhow!("--n is required"));
    let mut meta = Map::new();
    let body = match a.family {
        Family::ParallelOutlier => {
            let n = need_n()?;
            meta.insert("family".into(), json!("parallel-outlier"));
            meta.insert("n".into(), json!(n));
            meta.insert("c".into(), json!(2));
            tree_text(&gen_parallel_outlier(n)?, a.format)
        }
        Family::Partition => {
            meta.insert("family".into(), json!("partition"));
            meta.insert("set".into(), json!(a.set));
            meta.insert("c".into(), json!(2));
            tree_text(&gen_partition_reduction(&a.set)?, a.format)
        }
        Family::Subsetsum => {
            let x = a.x.ok_or_else(|| anyhow!("--x is required"))?;
            let k = a.k.ok_or_else(|| anyhow!("--k is required"))?;
            let g = gen_subsetsum_reduction(&a.set, x, k)?;
            meta.insert("family".into(), json!("subsetsum"));
            meta.insert("set".into(), json!(a.set));
            meta.insert("x".into(), json!(x));
            meta.insert("k".into(), json!(k));
            meta.insert("c".into(), json!(a.set.len() + k));
            meta.insert("fork_weight".into(), json!("1e-9 stands in for 0"));
            canonical_json(&serde_json::to_value(g.to_json())?)
        }
        Family::GreedyWorst => {
            let inst = gen_greedy_worstcase(need_n()?)?;
            for (k, v) in &inst.metadata {
                meta.insert(k.clone(), json!(v));
            }
            meta.insert("c".into(), json!(inst.resources));
            tree_text(&inst.tree, a.format)
        }
        Family::Random => {
            let params = RandomSpdParams {
                n_leaves: need_n()?,
                p_serial: a.p_serial,
                max_fanout: a.max_fanout,
                weight_range: (a.w_min, a.w_max),
                edge_weight_range: (a.b_min, a.b_max),
            };
            meta.insert("family".into(), json!("random"));
            meta.insert("n".into(), json!(params.n_leaves));
            meta.insert("seed".into(), json!(a.seed));
            meta.insert("p_serial".into(), json!(params.p_serial));
            meta.insert("max_fanout".into(), json!(params.max_fanout));
            meta.insert("weight_range".into(), json!([a.w_min, a.w_max]));
            meta.insert("edge_weight_range".into(), json!([a.b_min, a.b_max]));
            tree_text(&gen_random_spd(&params, a.seed)?, a.format)
        }
    };
    let header = format!("// {}\n", serde_json::to_string(&Value::Object(meta))?);
    write_output(a.out.as_ref(), &(header + &body))
}

fn tree_text(t: &SpdTree, format: Format) -> String {
    match format {
        Format::Json => canonical_json(&serde_json::to_value(t.to_json()).expect("trees serialize")),
        _ => serialize_tree(t) + "\n",
    }
}

fn discrete_c(c: f64) -> Result<usize> {
    if c >= 1.0 && c.fract() == 0.0 && c <= u32::MAX as f64 {
        Ok(c as usize)
    } else {
        bail!("--c must be a positive integer for discrete algorithms, got {c}")
    }
}

fn policy(alg: Algorithm) -> Option<GreedyPolicy> {
    match alg {
        Algorithm::GreedyImprove => Some(GreedyPolicy::RetainIfImproves),
        Algorithm::GreedyKeep => Some(GreedyPolicy::RetainUnlessWorse),
        Algorithm::GreedyPath => Some(GreedyPolicy::RetainUnlessPathWorse),
        _ => None,
    }
}

/// Runs one algorithm; the report always carries `"algorithm"` and either `"d"` or `"delta"`.
fn run_algorithm(inst: &Instance, c: f64, alg: Algorithm, gamma: f64) -> Result<Value> {
    let mut report = match alg {
        Algorithm::Cont => {
            let t = inst.tree().context("cont requires a tree")?;
            let shares = solve_cont(t, c)?;
            let cost = continuous_cost(t, &shares)?;
            json!({
                "capacity": c,
                "critical_path": cost.critical_path,
                "delta": cost.total_cost,
                "shares": shares.shares,
            })
        }
        Algorithm::Disc => {
            let t = inst.tree().context("disc requires a tree")?;
            allocate(t, discrete_c(c)?, gamma)?.to_json(&inst.graph)
        }
        Algorithm::Trivial => allocation_report(&inst.graph, &trivial_single(&inst.graph)),
        Algorithm::Avg => allocation_report(&inst.graph, &balanced_avg(&inst.graph, discrete_c(c)?)),
        greedy => {
            let t = inst.tree().with_context(|| format!("{} requires a tree", greedy.name()))?;
            let r = greedy_collocate(t, discrete_c(c)?, policy(greedy).unwrap(), gamma)?;
            let mut v = r.report.to_json(&inst.graph);
            v["retained"] = json!(r.retained);
            v
        }
    };
    report["algorithm"] = json!(alg.name());
    Ok(report)
}

fn allocation_report(g: &StreamingGraph, alloc: &Allocation) -> Value {
    let cost = streaming_cost(g, alloc).expect("allocation covers the graph");
    json!({
        "allocation": alloc.assignment(),
        "critical_path": cost.critical_path,
        "d": cost.total_cost,
        "d_hat": hat_cost(g, alloc).expect("allocation covers the graph"),
    })
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    if !(a.c > 0.0) {
        bail!("--c must be positive");
    }
    let inst = input::read_instance(&a.input)?;
    let report = run_algorithm(&inst, a.c, a.alg, a.gamma)?;
    write_output(a.out.as_ref(), &canonical_json(&report))
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let inst = input::read_instance(&a.input)?;
    let text = fs::read_to_string(&a.allocation).with_context(|| format!("reading {}", a.allocation.display()))?;
    let value: Value = serde_json::from_str(&input::strip_comments(&text)).context("allocation is not JSON")?;
    let map = value.get("allocation").unwrap_or(&value);
    let map = map.as_object().context("allocation must be a JSON object of task → resource")?;
    let mut assignment = std::collections::BTreeMap::new();
    for (task, r) in map {
        let r = r.as_u64().with_context(|| format!("resource of {task} must be a positive integer"))?;
        assignment.insert(task.clone(), r as usize);
    }
    let c = a.c.unwrap_or_else(|| assignment.values().copied().max().unwrap_or(1));
    let alloc = Allocation::new(assignment, c)?;
    let report = streaming_cost(&inst.graph, &alloc)?;
    let mut value = serde_json::to_value(&report)?;
    value["d_hat"] = json!(hat_cost(&inst.graph, &alloc)?);
    write_output(a.out.as_ref(), &canonical_json(&value))
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    if a.c == 0 {
        bail!("--c must be positive");
    }
    let inst = input::read_instance(&a.input)?;
    let delta = match inst.tree() {
        Some(t) => Some(continuous_cost(t, &solve_cont(t, a.c as f64)?)?.total_cost),
        None => None,
    };
    let oracle = if a.oracle {
        let mut config = OracleConfig::from_env();
        if let Some(n) = a.oracle_max_n {
            config = config.with_max_n(n);
        }
        match brute_force_optimal_with(&inst.graph, a.c, &config) {
            Ok((_, d)) => Some(d),
            Err(e @ OracleError::InstanceTooLarge { .. }) => return Err(LimitExceeded(e.to_string()).into()),
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    let mut rows = Vec::new();
    for &alg in &a.algs {
        if alg == Algorithm::Cont {
            continue;
        }
        let report = run_algorithm(&inst, a.c as f64, alg, a.gamma)?;
        let d = report["d"].as_f64().expect("discrete reports carry d");
        rows.push((alg.name().to_string(), d));
    }
    if let Some(d) = oracle {
        rows.push(("oracle".to_string(), d));
    }

    let text = match a.format {
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(name, d)| {
                    let mut row = json!({ "algorithm": name, "d": d });
                    if let Some(delta) = delta {
                        row["ratio_delta"] = json!(d / delta);
                    }
                    if let Some(opt) = oracle {
                        row["ratio_oracle"] = json!(d / opt);
                    }
                    row
                })
                .collect();
            canonical_json(&json!({ "c": a.c, "delta": delta, "oracle": oracle, "rows": rows }))
        }
        _ => {
            let mut s = format!("c = {}", a.c);
            if let Some(delta) = delta {
                s += &format!(", delta = {}", fmt_num(delta));
            }
            s.push('\n');
            let mut header = format!("{:<16} {:>14}", "algorithm", "d");
            if delta.is_some() {
                header += &format!(" {:>12}", "d/delta");
            }
            if oracle.is_some() {
                header += &format!(" {:>12}", "d/oracle");
            }
            s += header.trim_end();
            s.push('\n');
            for (name, d) in &rows {
                let mut line = format!("{name:<16} {:>14}", fmt_num(*d));
                if let Some(delta) = delta {
                    line += &format!(" {:>12.6}", d / delta);
                }
                if let Some(opt) = oracle {
                    line += &format!(" {:>12.6}", d / opt);
                }
                s += &line;
                s.push('\n');
            }
            s
        }
    };
    write_output(a.out.as_ref(), &text)
}

pub(crate) fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:.6}")
    }
}
