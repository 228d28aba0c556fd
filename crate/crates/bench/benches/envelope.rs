use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use eil_bench::{bean_aeil_branch, curves, parallel_cusp_jets};
use eil_core::affine::affine_frame;
use eil_core::envelope::{build_envelope, BuildOptions};
use eil_core::locus::trace_locus;
use eil_core::report::classify;
use eil_core::singularities::numeric_cusp_scan;
use eil_core::AlphaParam;

fn invariants(c: &mut Criterion) {
    let mut group = c.benchmark_group("affine_frame_256");
    for (name, curve) in curves() {
        let ts = curve.sample_params(256);
        group.bench_function(name, |b| {
            b.iter(|| {
                ts.iter()
                    .map(|&t| affine_frame(&curve.eval_jet(t).unwrap()).unwrap().mu)
                    .sum::<f64>()
            })
        });
    }
    group.finish();
}

fn locus(c: &mut Criterion) {
    let alpha = AlphaParam::new(0.6).unwrap();
    let mut group = c.benchmark_group("trace_locus");
    group.sample_size(20);
    for (name, curve) in curves() {
        for grid in [128usize, 256, 512] {
            group.bench_with_input(BenchmarkId::new(name, grid), &grid, |b, &g| {
                b.iter(|| trace_locus(&curve, &alpha, g))
            });
        }
    }
    group.finish();
}

fn envelope(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_envelope");
    group.sample_size(10);
    for (name, curve) in curves() {
        for a in [0.5, 0.6] {
            let alpha = AlphaParam::new(a).unwrap();
            group.bench_with_input(BenchmarkId::new(name, a), &alpha, |b, alpha| {
                b.iter(|| build_envelope(&curve, alpha, &BuildOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

fn singularities(c: &mut Criterion) {
    let branch = bean_aeil_branch(0.6);
    c.bench_function("numeric_cusp_scan/bean_aeil", |b| b.iter(|| numeric_cusp_scan(black_box(&branch))));
    let jets = parallel_cusp_jets();
    c.bench_function("classify/parallel_cusp", |b| b.iter(|| classify(black_box(&jets)).unwrap()));
}

criterion_group!(benches, invariants, locus, envelope, singularities);
criterion_main!(benches);
