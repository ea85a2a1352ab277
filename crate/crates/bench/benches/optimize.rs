use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cvtf_core::optimize::{grid_oracle, minimize_bi, minimize_uni};
use cvtf_core::{MinimizeOptions, PolytopeSpec};

fn frank_wolfe(c: &mut Criterion) {
    let opts = MinimizeOptions::default();
    let mut g = c.benchmark_group("minimize_uni");
    for m in [10usize, 30] {
        let spec = PolytopeSpec::uni(m, 0.3).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &spec, |b, spec| {
            b.iter(|| minimize_uni(black_box(spec), 0.1, &opts).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("minimize_bi");
    g.sample_size(20);
    for m in [3usize, 6] {
        let spec = PolytopeSpec::bi(m, 0.05).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &spec, |b, spec| {
            b.iter(|| minimize_bi(black_box(spec), 0.1, 2.0, &opts).unwrap())
        });
    }
    g.finish();
}

fn lattice(c: &mut Criterion) {
    let spec = PolytopeSpec::uni(3, 0.3).unwrap();
    c.bench_function("grid_oracle/uni3_step0.02", |b| b.iter(|| grid_oracle(black_box(&spec), 0.1, None, 0.02).unwrap()));
}

criterion_group!(benches, frank_wolfe, lattice);
criterion_main!(benches);
