use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use root_barrier::montecarlo::{sample_hitting, McConfig};
use root_barrier::pde::solve_barrier;
use root_barrier::{Barrier, ExampleMeasure, Execution, SolverGrid};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut v = vec![("sequential", Execution::Sequential)];
    if Execution::Parallel.is_parallel() {
        v.push(("parallel", Execution::Parallel));
    }
    v
}

fn uniform_barrier() -> Barrier {
    let m = ExampleMeasure::Uniform.build().unwrap();
    let grid = SolverGrid::with_steps(-1.5, 1.5, 1.0, 0.02, 1e-4).unwrap();
    solve_barrier(&m, &grid, None, Execution::default())
        .unwrap()
        .barrier
        .regularize()
        .unwrap()
}

fn monte_carlo(c: &mut Criterion) {
    let b1 = uniform_barrier();
    let family = vec![(0.81, b1.scale(0.81).unwrap()), (1.0, b1)];
    let cfg = McConfig {
        n_paths: 4_000,
        dt_sim: 5e-5,
        t_cap: 1.0,
        seed: 1,
        lambdas: vec![0.81, 1.0],
    };
    let mut group = c.benchmark_group("sample_hitting");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_hitting(black_box(&family), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn wide_pde(c: &mut Criterion) {
    let m = ExampleMeasure::Abs.build().unwrap();
    // Rows wide enough to be split across threads.
    let grid = SolverGrid::with_steps(-1.5, 1.5, 3e-5, 2e-4, 3e-8).unwrap();
    let mut group = c.benchmark_group("solve_barrier_wide");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| solve_barrier(black_box(&m), &grid, None, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, wide_pde);
criterion_main!(benches);
