use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spd_alloc::continuous::{solve, solve_capped};
use spd_alloc::discrete::{allocate, DEFAULT_GAMMA};
use spd_alloc::graph::streaming_cost;
use spd_alloc::oracle::brute_force_optimal;
use spd_alloc::spd::expand;
use spd_alloc_bench::{random_tree, round_robin};
use std::hint::black_box;

fn continuous(c: &mut Criterion) {
    let mut group = c.benchmark_group("continuous");
    for n in [16, 256, 4096] {
        let t = random_tree(n, 1, false);
        group.bench_with_input(BenchmarkId::new("solve", n), &t, |b, t| b.iter(|| solve(black_box(t), 4.0)));
        group.bench_with_input(BenchmarkId::new("solve_capped", n), &t, |b, t| b.iter(|| solve_capped(black_box(t), 8.0)));
    }
    // one residual solve per pinned leaf
    let t = random_tree(256, 1, false);
    group.bench_function("solve_capped_many_pins/256", |b| b.iter(|| solve_capped(black_box(&t), 64.0)));
    group.finish();
}

fn discrete(c: &mut Criterion) {
    let mut group = c.benchmark_group("discrete");
    for n in [16, 256, 4096] {
        let t = random_tree(n, 2, false);
        group.bench_with_input(BenchmarkId::new("allocate", n), &t, |b, t| {
            b.iter(|| allocate(black_box(t), 8, DEFAULT_GAMMA))
        });
    }
    group.finish();
}

fn cost(c: &mut Criterion) {
    let mut group = c.benchmark_group("streaming_cost");
    for n in [16, 256, 4096] {
        let g = expand(&random_tree(n, 3, true));
        let a = round_robin(&g, 8);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(g, a), |b, (g, a)| {
            b.iter(|| streaming_cost(black_box(g), black_box(a)))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for n in [6, 8, 10] {
        let g = expand(&random_tree(n, 4, true));
        group.bench_with_input(BenchmarkId::new("c3", n), &g, |b, g| b.iter(|| brute_force_optimal(black_box(g), 3)));
    }
    group.finish();
}

criterion_group!(benches, continuous, discrete, cost, oracle);
criterion_main!(benches);
