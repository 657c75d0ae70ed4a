use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spd-alloc")).args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_spd-alloc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const CHAIN: &str = r#"{"nodes":[{"id":"a","w":1},{"id":"b","w":1}],"edges":[{"u":"a","v":"b","b":5}]}"#;

#[test]
fn gen_random_emits_a_tree() {
    let text = stdout(&run(&["gen", "random", "--n", "8", "--seed", "7"]));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("// {"));
    let tree = spd_alloc::spd::parse_tree(lines.next().unwrap()).unwrap();
    assert_eq!(tree.leaf_count(), 8);
}

#[test]
fn gen_partition_leaf_count() {
    let text = stdout(&run(&["gen", "partition", "--set", "1,2,3", "--format", "json"]));
    let body: String = text.lines().filter(|l| !l.starts_with("//")).collect();
    let tree = spd_alloc::spd::SpdTree::from_json_str(&body).unwrap();
    assert_eq!(tree.leaf_count(), 12);
}

#[test]
fn gen_rejects_bad_params() {
    assert_eq!(run(&["gen", "subsetsum", "--set", "1,2", "--x", "3", "--k", "3"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "parallel-outlier", "--n", "10"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "nonsense"]).status.code(), Some(2));
}

#[test]
fn gen_subsetsum_graph() {
    let text = stdout(&run(&["gen", "subsetsum", "--set", "1,2", "--x", "3", "--k", "2"]));
    let body: String = text.lines().filter(|l| !l.starts_with("//")).collect();
    let g = spd_alloc::graph::StreamingGraph::from_json_str(&body).unwrap();
    assert_eq!(g.len(), 12);
    assert_eq!(g.edge_weight("u1", "nu1"), Some(75.0));
}

#[test]
fn solve_examples() {
    let v = json(&run_stdin(&["solve", "-i", "-", "--c", "1", "--alg", "cont"], "s(a:1,b:4)"));
    assert!((v["delta"].as_f64().unwrap() - 9.0).abs() < 1e-9);
    assert!((v["shares"]["a"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);

    let v = json(&run_stdin(&["solve", "-i", "-", "--c", "2", "--alg", "disc"], "p(a:1,b:1,c:1,d:1)"));
    assert_eq!(v["d"], 4.0);

    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.json", CHAIN);
    let v = json(&run(&["solve", "-i", &chain, "--c", "2", "--alg", "trivial"]));
    assert_eq!(v["d"], 4.0);
    assert_eq!(v["algorithm"], "trivial");
}

#[test]
fn tree_algorithms_reject_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.json", CHAIN);
    for alg in ["cont", "disc", "greedy-keep"] {
        assert_eq!(run(&["solve", "-i", &chain, "--c", "2", "--alg", alg]).status.code(), Some(2), "{alg}");
    }
}

#[test]
fn eval_examples() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.json", CHAIN);
    let same = write(dir.path(), "same.json", r#"{"a":1,"b":1}"#);
    let split = write(dir.path(), "split.json", r#"{"a":1,"b":2}"#);
    let missing = write(dir.path(), "missing.json", r#"{"a":1}"#);
    assert_eq!(json(&run(&["eval", "-i", &chain, "-a", &same]))["total_cost"], 4.0);
    assert_eq!(json(&run(&["eval", "-i", &chain, "-a", &split]))["total_cost"], 7.0);
    assert_eq!(run(&["eval", "-i", &chain, "-a", &missing]).status.code(), Some(2));
}

#[test]
fn eval_accepts_a_solve_report() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write(dir.path(), "t.txt", "s(a:1, p(b:2, c:3), d:1)[b=2]");
    let report = stdout(&run(&["solve", "-i", &tree, "--c", "2", "--alg", "disc"]));
    let d = serde_json::from_str::<Value>(&report).unwrap()["d"].as_f64().unwrap();
    let report = write(dir.path(), "r.json", &report);
    let v = json(&run(&["eval", "-i", &tree, "-a", &report, "--c", "2"]));
    assert_eq!(v["total_cost"].as_f64().unwrap(), d);
}

#[test]
fn compare_outlier_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "po.txt", &stdout(&run(&["gen", "parallel-outlier", "--n", "12"])));
    let v = json(&run(&["compare", "-i", &inst, "--c", "2", "--algs", "avg,disc", "--oracle", "--format", "json"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["algorithm"], "avg");
    assert_eq!(rows[0]["d"], 16.0);
    assert_eq!(rows[2]["algorithm"], "oracle");
    assert_eq!(v["oracle"], 10.0);
    for row in rows {
        assert!(row["ratio_delta"].as_f64().unwrap() >= 1.0);
    }
}

#[test]
fn compare_limits() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "po.txt", &stdout(&run(&["gen", "parallel-outlier", "--n", "300"])));
    assert_eq!(run(&["compare", "-i", &inst, "--c", "2", "--oracle"]).status.code(), Some(3));
    let table = stdout(&run(&["compare", "-i", &inst, "--c", "2"]));
    assert!(!table.contains("oracle"));
    assert!(table.lines().any(|l| l.starts_with("avg ")));
}

#[test]
fn bench_outputs() {
    let header = "suite,instance,n,c,seed,algorithm,d,delta,ratio,bound_ok,runtime_ms\n";
    assert_eq!(stdout(&run(&["bench", "--suite", "disc-ratio", "--sizes"])), header);

    let csv = stdout(&run(&["bench", "--suite", "avg-counterexample", "--sizes", "12,24,48"]));
    let avg: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[5] == "avg")
        .map(|f| (f[2].parse().unwrap(), f[6].parse().unwrap()))
        .collect();
    assert_eq!(avg.len(), 3);
    for (n, d) in avg {
        assert_eq!(d, n * n / 9.0);
    }

    let csv = stdout(&run(&["bench", "--suite", "disc-ratio", "--sizes", "10,20", "--seeds", "1,2,3"]));
    let flags: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(9).unwrap()).collect();
    assert_eq!(flags.len(), 18);
    assert!(flags.iter().all(|&f| f == "true" || f.is_empty()));
}
