use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ktu::lp::lp_separability;
use ktu::sampling::sample_ball;
use ktu::{p1_ball_lower, p1_corr_lower, BallBoundQuery, CorrBoundQuery};

fn ball_bound(c: &mut Criterion) {
    let mut g = c.benchmark_group("p1_ball_lower");
    for grid in [128, 512] {
        let q = BallBoundQuery::new(2000, 100_000, 9).with_grid(grid);
        g.bench_function(format!("n2000_k9_grid{grid}"), |b| b.iter(|| p1_ball_lower(black_box(&q)).unwrap()));
    }
    g.finish();
}

fn corr_bound(c: &mut Criterion) {
    let q = CorrBoundQuery::new(2000, 100_000, 10, 10, 0.5, 0.05);
    c.bench_function("p1_corr_lower/n2000_k10", |b| b.iter(|| p1_corr_lower(black_box(&q)).unwrap()));
}

fn lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp_separability");
    g.sample_size(10);
    for (n, m) in [(100, 500), (400, 2000)] {
        let bg = sample_ball(n, m, 1).unwrap().points;
        let y = sample_ball(n, 3, 2).unwrap().points;
        g.bench_function(format!("n{n}_M{m}_k3"), |b| b.iter(|| lp_separability(black_box(&bg), black_box(&y)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, ball_bound, corr_bound, lp);
criterion_main!(benches);
