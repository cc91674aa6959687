//! The LP separability oracle checked against an independent route: the
//! distance between the two convex hulls, approximated by Frank-Wolfe.
//!
//! Finite sets are strictly separable iff their hulls are disjoint. Any
//! iterate `z = p - q` (p, q in the hulls) bounds the distance from above by
//! `|z|`, and the direction `z/|z|` bounds it from below by the gap of the
//! projections.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use ktu::lp::{lp_separability, Separability};
use ktu::sampling::{ball_points, rng_from_seed};

struct HullDistance {
    upper: f64,
    /// Best certified lower bound; positive only if some direction separates.
    lower: f64,
}

fn hull_distance(y: &DMatrix<f64>, bg: &DMatrix<f64>, iters: usize) -> HullDistance {
    let mut z: DVector<f64> = y.row(0).transpose() - bg.row(0).transpose();
    let mut lower = f64::NEG_INFINITY;
    for _ in 0..iters {
        let zn = z.norm();
        if zn == 0.0 {
            return HullDistance { upper: 0.0, lower };
        }
        let py = y * &z;
        let px = bg * &z;
        let iy = py.imin();
        let ix = px.imax();
        lower = lower.max((py[iy] - px[ix]) / zn);
        let s: DVector<f64> = y.row(iy).transpose() - bg.row(ix).transpose();
        let d = s - &z;
        let dd = d.norm_squared();
        if dd == 0.0 {
            break;
        }
        let gamma = (-z.dot(&d) / dd).clamp(0.0, 1.0);
        if gamma == 0.0 {
            break;
        }
        z += gamma * d;
    }
    HullDistance { upper: z.norm(), lower }
}

/// `min l(y) - max l(x)` of a unit-direction witness.
fn witness_gap(sep: &Separability, y: &DMatrix<f64>, bg: &DMatrix<f64>) -> f64 {
    let Separability::Separable { witness, .. } = sep else {
        panic!("expected a witness, got {sep:?}");
    };
    let ly = witness.eval_rows(y).min();
    let lx = witness.eval_rows(bg).max();
    ly - lx
}

#[test]
fn random_instances_agree_with_hull_distance() {
    let (mut separable, mut not) = (0, 0);
    for seed in 0..10u64 {
        let mut rng = rng_from_seed(100 + seed);
        let m = [60, 400, 3000][seed as usize % 3];
        let bg = ball_points(50, m, &mut rng);
        let y = ball_points(50, 3, &mut rng);
        let lp = lp_separability(&bg, &y).unwrap();
        let fw = hull_distance(&y, &bg, 4000);
        assert!(fw.lower <= fw.upper + 1e-12);
        match &lp {
            Separability::Separable { .. } => {
                separable += 1;
                let gap = witness_gap(&lp, &y, &bg);
                assert!(gap > 0.0);
                assert!(fw.upper >= gap - 1e-9, "seed {seed}: hull distance {} < witness gap {gap}", fw.upper);
            }
            Separability::NotSeparable { .. } => {
                not += 1;
                assert!(fw.lower <= 1e-9, "seed {seed}: a separating direction exists, lower {}", fw.lower);
            }
            Separability::Indeterminate(why) => panic!("seed {seed}: {why}"),
        }
    }
    assert_eq!(separable + not, 10);
}

#[test]
fn planted_overlap_is_not_separable() {
    for seed in 0..10u64 {
        let mut rng = rng_from_seed(200 + seed);
        let bg = ball_points(50, 300, &mut rng);
        // each error point is a convex combination of background points
        let mut y = DMatrix::zeros(3, 50);
        for r in 0..3 {
            let weights: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            for (j, w) in weights.iter().enumerate() {
                let row = bg.row(j) * (w / total);
                let mut target = y.row_mut(r);
                target += row;
            }
        }
        let lp = lp_separability(&bg, &y).unwrap();
        assert!(matches!(lp, Separability::NotSeparable { .. }), "seed {seed}: {lp:?}");
        let fw = hull_distance(&y, &bg, 20_000);
        assert!(fw.upper < 1e-2, "seed {seed}: hull distance {}", fw.upper);
        assert!(fw.lower <= 1e-9);
    }
}

#[test]
fn planted_gap_is_separable() {
    for seed in 0..10u64 {
        let mut rng = rng_from_seed(300 + seed);
        let bg = ball_points(50, 1000, &mut rng);
        let mut y = ball_points(50, 3, &mut rng) * 0.5;
        for r in 0..3 {
            y[(r, 0)] += 1.5;
        }
        let lp = lp_separability(&bg, &y).unwrap();
        let gap = witness_gap(&lp, &y, &bg);
        let fw = hull_distance(&y, &bg, 4000);
        assert!(fw.lower > 0.0, "seed {seed}: no certified gap");
        assert!(fw.upper >= gap - 1e-9, "seed {seed}: hull distance {} < witness gap {gap}", fw.upper);
    }
}
