use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cvtf_core::fidelity::{kraus_oracle_bi_auto, kraus_oracle_uni_auto};
use cvtf_core::{exact_bi_fidelity, exact_uni_fidelity, submult_gap, BipartiteSpectrum, SchmidtSpectrum};

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_uni_fidelity");
    for m in [4usize, 16, 64] {
        let s = SchmidtSpectrum::new(&uniform(m + 1)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &s, |b, s| b.iter(|| exact_uni_fidelity(black_box(s), 0.3)));
    }
    g.finish();

    let mut g = c.benchmark_group("exact_bi_fidelity");
    for m in [2usize, 6, 12] {
        let side = m + 1;
        let grid = BipartiteSpectrum::from_flat(side, &uniform(side * side)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &grid, |b, grid| {
            b.iter(|| exact_bi_fidelity(black_box(grid), 0.3, 1.5))
        });
    }
    g.finish();

    c.bench_function("submult_gap", |b| b.iter(|| submult_gap(black_box(0.1), 0.1)));
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("kraus_oracle");
    g.sample_size(20);
    for m in [2usize, 6] {
        let s = SchmidtSpectrum::new(&uniform(m + 1)).unwrap();
        g.bench_with_input(BenchmarkId::new("uni", m), &s, |b, s| b.iter(|| kraus_oracle_uni_auto(black_box(s), 0.5).unwrap()));
    }
    let grid = BipartiteSpectrum::from_flat(3, &uniform(9)).unwrap();
    g.bench_function("bi/2", |b| b.iter(|| kraus_oracle_bi_auto(black_box(&grid), 0.5, 1.0).unwrap()));
    g.finish();
}

criterion_group!(benches, exact, oracle);
criterion_main!(benches);
