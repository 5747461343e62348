use bigjump_core::asymptotics::{per_epoch_series, SeriesOptions};
use bigjump_core::risk_engine::{simulate, tail_curve, TruncationPolicy};
use bigjump_core::tail_laws::{hill_estimate, TailLaw};
use bigjump_core::presets;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const PATHS: u64 = 20_000;

fn paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("tail_curve");
    g.throughput(Throughput::Elements(PATHS));
    g.sample_size(10);
    for (name, (bundle, set)) in [("weak", bigjump_bench::weak()), ("strong", bigjump_bench::strong())] {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| tail_curve(&bundle, &set, &[50.0, 500.0], PATHS, &TruncationPolicy::default(), 7).unwrap())
        });
    }
    g.finish();

    let (bundle, set) = bigjump_bench::weak();
    let premium = presets::reference_premium();
    let mut g = c.benchmark_group("surplus_ruin");
    g.throughput(Throughput::Elements(PATHS));
    g.sample_size(10);
    g.bench_function("weak", |b| {
        b.iter(|| simulate(&bundle, &set, &[50.0, 500.0], PATHS, &TruncationPolicy::default(), 7, Some(&premium)).unwrap())
    });
    g.finish();
}

fn series(c: &mut Criterion) {
    let (bundle, set) = bigjump_bench::weak();
    let opts = SeriesOptions { n_per_epoch: 5_000, tol: 1e-2, ..SeriesOptions::default() };
    let mut g = c.benchmark_group("per_epoch_series");
    g.sample_size(10);
    g.bench_function("weak", |b| b.iter(|| per_epoch_series(&bundle, &set, 54.0, &opts, 7).unwrap()));
    g.finish();
}

fn hill(c: &mut Criterion) {
    // Regular quantile grid of Pareto(2): deterministic and RNG-free.
    let law = TailLaw::Pareto { alpha: 2.0, scale: 1.0 };
    let n = 100_000;
    let data: Vec<f64> = (0..n).map(|i| law.tail_quantile((i as f64 + 0.5) / n as f64)).collect();
    c.bench_function("hill_1e5", |b| b.iter(|| hill_estimate(&data, 1_000).unwrap()));
}

criterion_group!(benches, paths, series, hill);
criterion_main!(benches);
