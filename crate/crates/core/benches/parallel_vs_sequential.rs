//! Batch-runner throughput: rayon data-parallel `run_batch` against the
//! sequential reference, over a range of batch sizes. Requires the
//! `parallel` feature (on by default) so both paths are present.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use swipt_core::geometry::SystemParams;
use swipt_core::montecarlo::{run_batch, run_batch_sequential};

fn bench_batches(c: &mut Criterion) {
    let params = SystemParams::defaults();
    let mut group = c.benchmark_group("batch");
    for &n_reps in &[256usize, 1024, 4096] {
        group.throughput(Throughput::Elements(n_reps as u64));
        group.bench_with_input(BenchmarkId::new("parallel", n_reps), &n_reps, |b, &n| {
            b.iter(|| run_batch(&params, n, 1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n_reps), &n_reps, |b, &n| {
            b.iter(|| run_batch_sequential(&params, n, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batches);
criterion_main!(benches);
