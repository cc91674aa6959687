use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, dot, mean_rows, sorted_eigen};

/// First-stage functional `l(x) = <w/|w|, x> - c` of one error cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawUnit", into = "RawUnit")]
pub struct KnowledgeUnit {
    w: DVector<f64>,
    c: f64,
    cluster: usize,
    w_hat: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawUnit {
    w: DVector<f64>,
    c: f64,
    cluster: usize,
}

impl From<RawUnit> for KnowledgeUnit {
    fn from(r: RawUnit) -> Self {
        Self::from_parts(r.w, r.c, r.cluster)
    }
}

impl From<KnowledgeUnit> for RawUnit {
    fn from(u: KnowledgeUnit) -> Self {
        Self {
            w: u.w,
            c: u.c,
            cluster: u.cluster,
        }
    }
}

impl KnowledgeUnit {
    /// `w` must be nonzero; the unit direction is recomputed from it the
    /// same way every time, so a unit rebuilt from stored `(w, c)` evaluates
    /// identically.
    pub fn from_parts(w: DVector<f64>, c: f64, cluster: usize) -> Self {
        let w_hat = &w / w.norm();
        Self { w, c, cluster, w_hat }
    }

    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn unit_direction(&self) -> &DVector<f64> {
        &self.w_hat
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn cluster(&self) -> usize {
        self.cluster
    }

    /// `<w_hat, xi>`, the score compared against `c`.
    pub fn score(&self, xi: &[f64]) -> f64 {
        dot(self.w_hat.as_slice(), xi)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.score(xi) - self.c
    }

    pub fn fires(&self, xi: &[f64]) -> bool {
        self.score(xi) >= self.c
    }
}

/// Fitted unit with solve diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherFit {
    pub unit: KnowledgeUnit,
    /// `|(S_A + S_B) w - (mu_A - mu_B)| / |mu_A - mu_B|`.
    pub residual: f64,
    /// Smallest eigenvalue of the covariance sum.
    pub min_eigenvalue: f64,
    pub pseudo_inverse: bool,
}

fn row_vec(m: &DMatrix<f64>, r: usize) -> Vec<f64> {
    m.row(r).iter().copied().collect()
}

/// Fisher discriminant between `cluster` (rows, class A) and `background`
/// (rows, class B), thresholded at the cluster's smallest projection.
pub fn fisher_unit(background: &DMatrix<f64>, cluster: &DMatrix<f64>, cluster_id: usize) -> Result<FisherFit> {
    if background.nrows() < 2 {
        return Err(Error::InvalidInput("Fisher unit needs at least two background points".into()));
    }
    if cluster.nrows() == 0 {
        return Err(Error::InvalidInput("Fisher unit needs a nonempty cluster".into()));
    }
    if cluster.ncols() != background.ncols() {
        return Err(Error::DimensionMismatch {
            expected: background.ncols(),
            got: cluster.ncols(),
        });
    }
    let diff = mean_rows(cluster) - mean_rows(background);
    let diff_norm = diff.norm();
    if !(diff_norm > 0.0) {
        return Err(Error::DegenerateDirection("cluster and background means coincide".into()));
    }
    let sum = covariance(background) + covariance(cluster);
    let (values, _) = sorted_eigen(&sum);
    let min_eigenvalue = values.iter().copied().fold(f64::INFINITY, f64::min);

    let (w, pseudo_inverse) = match sum.clone().cholesky() {
        Some(ch) => (ch.solve(&diff), false),
        None => {
            let svd = sum.clone().svd(true, true);
            let cutoff = 1e-12 * svd.singular_values.max();
            let w = svd
                .solve(&diff, cutoff)
                .map_err(|e| Error::FitFailure(format!("pseudo-inverse solve failed: {e}")))?;
            (w, true)
        }
    };
    if !(w.norm() > 0.0) || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateDirection("Fisher solve returned a zero direction".into()));
    }
    let residual = (&sum * &w - &diff).norm() / diff_norm;

    let provisional = KnowledgeUnit::from_parts(w, 0.0, cluster_id);
    let c = (0..cluster.nrows())
        .map(|r| provisional.score(&row_vec(cluster, r)))
        .fold(f64::INFINITY, f64::min);
    let unit = KnowledgeUnit::from_parts(provisional.w, c, cluster_id);
    Ok(FisherFit {
        unit,
        residual,
        min_eigenvalue,
        pseudo_inverse,
    })
}
