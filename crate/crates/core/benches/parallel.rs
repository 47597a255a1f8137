//! Sequential (one worker) against the default rayon pool on the hot paths.

use std::hint::black_box;
use std::sync::Arc;

use choquard_lattice::kernel::{build_table, ConvolutionMethod};
use choquard_lattice::verify::ground_state_oracle;
use choquard_lattice::{
    minimize_ground_state, rng, EnergyContext, LatticeSpec, ModelSpec, SolverConfig,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::{ThreadPool, ThreadPoolBuilder};

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let build = |n| ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    vec![("sequential", build(1)), ("parallel", build(0))]
}

fn context(model: ModelSpec, m: usize) -> EnergyContext {
    let table = Arc::new(build_table(model.lattice, model.alpha, m).unwrap());
    EnergyContext::new(model, table).unwrap()
}

fn kernel_table(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel_table");
    g.sample_size(10);
    let spec = LatticeSpec::new(2, 6).unwrap();
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new(name, "n2_r6_m256"), &pool, |b, pool| {
            b.iter(|| pool.install(|| build_table(spec, 1.0, 256).unwrap()))
        });
    }
    g.finish();
}

fn convolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("convolution");
    let ctx = context(ModelSpec::constant_single(2, 10, 2.0, 1.0, 4.0), 128);
    let mut r = rng::stream(0, 0);
    let u = rng::uniform_field(ctx.model().lattice, &mut r);
    for (name, pool) in pools() {
        for method in [ConvolutionMethod::Direct, ConvolutionMethod::Fft] {
            let id = BenchmarkId::new(name, format!("{method:?}").to_lowercase());
            g.bench_with_input(id, &pool, |b, pool| {
                b.iter(|| {
                    pool.install(|| ctx.table().convolve_with(black_box(&u), method).unwrap())
                })
            });
        }
    }
    g.finish();
}

fn multi_start(c: &mut Criterion) {
    let mut g = c.benchmark_group("multi_start");
    g.sample_size(10);
    let ctx = context(ModelSpec::default_1d(), 4096);
    let cfg = SolverConfig::default();
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new(name, "default_1d"), &pool, |b, pool| {
            b.iter(|| pool.install(|| minimize_ground_state(&ctx, &cfg).unwrap().energy))
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    let ctx = context(ModelSpec::constant_single(1, 3, 2.0, 0.5, 4.0), 4096);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new(name, "n1_r3_500dirs"), &pool, |b, pool| {
            b.iter(|| pool.install(|| ground_state_oracle(&ctx, 500, 0).unwrap().value))
        });
    }
    g.finish();
}

criterion_group!(benches, kernel_table, convolution, multi_start, oracle);
criterion_main!(benches);
