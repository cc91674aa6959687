use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::select_rows;
use crate::sampling::rng_from_seed;
use crate::separators::correlation_constants;

const MAX_ATTEMPTS: u64 = 10;
const MAX_ITERATIONS: usize = 300;

/// Partition of the whitened error set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub assignments: Vec<usize>,
    pub p: usize,
    /// Per-cluster `(beta1, beta2)`; `(0, 0)` for singletons.
    pub betas: Vec<(f64, f64)>,
    /// Clusters with more than one member and `beta2 <= 0`.
    pub flagged: Vec<bool>,
}

impl ClusterPartition {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == cluster)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.p];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }

    fn from_assignments(points: &DMatrix<f64>, assignments: Vec<usize>, p: usize) -> Self {
        let mut betas = Vec::with_capacity(p);
        let mut flagged = Vec::with_capacity(p);
        for c in 0..p {
            let rows = select_rows(points, |i| assignments[i] == c);
            let (b1, b2) = correlation_constants(&rows);
            betas.push((b1, b2));
            flagged.push(rows.nrows() > 1 && !(b2 > 0.0));
        }
        Self {
            assignments,
            p,
            betas,
            flagged,
        }
    }
}

fn sq_dist(a: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    a.row(i).iter().zip(c.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(points: &DMatrix<f64>, i: usize, centroids: &[DVector<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centre) in centroids.iter().enumerate() {
        let d = sq_dist(points, i, centre);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// k-means++ seeding.
fn seed_centroids<R: Rng>(points: &DMatrix<f64>, p: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let count = points.nrows();
    let first = rng.random_range(0..count);
    let mut centroids = vec![points.row(first).transpose()];
    let mut d2: Vec<f64> = (0..count).map(|i| sq_dist(points, i, &centroids[0])).collect();
    while centroids.len() < p {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = count - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..count)
        };
        let c = points.row(pick).transpose();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &DMatrix<f64>, mut centroids: Vec<DVector<f64>>) -> Vec<usize> {
    let count = points.nrows();
    let mut assignments: Vec<usize> = (0..count).map(|i| nearest(points, i, &centroids)).collect();
    for _ in 0..MAX_ITERATIONS {
        for (c, centre) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..count).filter(|&i| assignments[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            centre.fill(0.0);
            for &i in &members {
                *centre += points.row(i).transpose();
            }
            *centre /= members.len() as f64;
        }
        let next: Vec<usize> = (0..count).map(|i| nearest(points, i, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    assignments
}

/// Centroid-based partition of `points` (rows) into `p` nonempty clusters.
/// Deterministic for a given seed; an empty cluster triggers a re-seed with
/// `seed + attempt`, up to a fixed number of attempts.
pub fn cluster(points: &DMatrix<f64>, p: usize, seed: u64) -> Result<ClusterPartition> {
    let count = points.nrows();
    if p == 0 || p > count {
        return Err(Error::InvalidInput(format!(
            "cluster count {p} must lie in 1..={count}"
        )));
    }
    if p == count {
        return Ok(ClusterPartition::from_assignments(points, (0..count).collect(), p));
    }
    if p == 1 {
        return Ok(ClusterPartition::from_assignments(points, vec![0; count], 1));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng_from_seed(seed.wrapping_add(attempt));
        let centroids = seed_centroids(points, p, &mut rng);
        let assignments = lloyd(points, centroids);
        let mut sizes = vec![0usize; p];
        for &a in &assignments {
            sizes[a] += 1;
        }
        if sizes.iter().all(|&s| s > 0) {
            return Ok(ClusterPartition::from_assignments(points, assignments, p));
        }
    }
    Err(Error::FitFailure(format!(
        "k-means left an empty cluster after {MAX_ATTEMPTS} seedings (p = {p}, points = {count})"
    )))
}
