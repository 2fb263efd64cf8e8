//! Throughput of a sweep of independent runs: sequential baseline against
//! the rayon-backed path. Build with `--no-default-features` to confirm the
//! fallback (both benches then run the sequential code).

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use stabsim_core::batch::{run_sweep, run_sweep_serial, InitKind, RunSpec, STREAM_TREE};
use stabsim_core::engine::{default_max_moves, DaemonStrategy};
use stabsim_core::mix_seed;
use stabsim_core::tree::Tree;
use stabsim_core::Problem;

fn workload(runs: u64, n: usize) -> Vec<RunSpec> {
    (0..runs)
        .map(|seed| {
            let tree = Arc::new(Tree::random(n, mix_seed(seed, STREAM_TREE)).unwrap());
            RunSpec {
                tree,
                problem: if seed % 2 == 0 {
                    Problem::Packing
                } else {
                    Problem::Domination
                },
                k: 2,
                strategy: DaemonStrategy::ALL[seed as usize % DaemonStrategy::ALL.len()],
                seed,
                init: InitKind::RandomCorrupted,
                max_moves: default_max_moves(n),
            }
        })
        .collect()
}

fn bench_sweep(c: &mut Criterion) {
    let specs = workload(48, 40);
    let mut group = c.benchmark_group("sweep_48_runs_n40");
    group.sample_size(10);
    group.bench_function("serial", |b| b.iter(|| run_sweep_serial(&specs)));
    group.bench_function("parallel", |b| b.iter(|| run_sweep(&specs)));
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
