use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::hint::black_box;

use ktu::sampling::rng_from_seed;
use ktu::transfer::{build_cascade, build_single, FitConfig, LabeledStates};

fn states(n: usize, background: usize, k: usize) -> LabeledStates {
    let mut rng = rng_from_seed(3);
    let mut s = DMatrix::from_fn(background + k, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for r in background..background + k {
        s[(r, 0)] += 3.0;
    }
    let mask = (0..background + k).map(|r| r >= background).collect();
    LabeledStates::new(s, mask).unwrap()
}

fn fit(c: &mut Criterion) {
    let data = states(100, 1000, 10);
    let cfg = FitConfig::default();
    let mut g = c.benchmark_group("fit");
    g.sample_size(20);
    g.bench_function("build_single/n100_M1000_k10_p5", |b| b.iter(|| build_single(black_box(&data), 5, &cfg).unwrap()));
    g.bench_function("build_cascade/n100_M1000_k10_p5", |b| b.iter(|| build_cascade(black_box(&data), 5, &cfg).unwrap()));
    g.finish();
}

fn apply(c: &mut Criterion) {
    let data = states(100, 1000, 10);
    let corrector = build_single(&data, 5, &FitConfig::default()).unwrap();
    let x: Vec<f64> = data.states().row(3).iter().copied().collect();
    c.bench_function("apply/n100_p5", |b| b.iter(|| corrector.apply(black_box(&x)).unwrap()));
}

criterion_group!(benches, fit, apply);
criterion_main!(benches);
