use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::states::LabeledStates;
use crate::error::{Error, Result};
use crate::linalg::{covariance, dot, inverse_sqrt, mean_rows, select_rows, sorted_eigen, symmetrize};

/// Centering mean, principal-component projection `H` (n x m, orthonormal
/// columns) and symmetric whitener `W` (m x m). The feature map is
/// `x -> W H^T (x - mean)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessModel {
    pub mean: DVector<f64>,
    pub projection: DMatrix<f64>,
    pub whitener: DMatrix<f64>,
}

impl PreprocessModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn reduced_dim(&self) -> usize {
        self.whitener.nrows()
    }

    /// Feature vector of one state. Fitting and applying both go through
    /// this routine so that thresholds set at fit time reproduce exactly.
    pub fn transform(&self, x: &[f64]) -> Result<DVector<f64>> {
        let n = self.input_dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(self.mean.iter()).map(|(a, b)| a - b).collect();
        let m = self.reduced_dim();
        let reduced: Vec<f64> = (0..m)
            .map(|j| dot(self.projection.column(j).as_slice(), &centered))
            .collect();
        // W is symmetric, so row j equals column j.
        Ok(DVector::from_iterator(
            m,
            (0..m).map(|j| dot(self.whitener.column(j).as_slice(), &reduced)),
        ))
    }

    /// Transforms every row.
    pub fn transform_rows(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = self.reduced_dim();
        let mut out = DMatrix::zeros(rows.nrows(), m);
        let mut buf = vec![0.0; rows.ncols()];
        for r in 0..rows.nrows() {
            for (c, v) in buf.iter_mut().enumerate() {
                *v = rows[(r, c)];
            }
            let f = self.transform(&buf)?;
            out.set_row(r, &f.transpose());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centered {
    pub states: DMatrix<f64>,
    pub errors: DMatrix<f64>,
    pub mean: DVector<f64>,
}

/// Subtracts the mean of all states.
pub fn center(data: &LabeledStates) -> Result<Centered> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot center an empty state set".into()));
    }
    let mean = mean_rows(data.states());
    let mut states = data.states().clone();
    for mut r in states.row_iter_mut() {
        r -= mean.transpose();
    }
    let errors = select_rows(&states, |i| data.error_mask()[i]);
    Ok(Centered { states, errors, mean })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularized {
    pub states: DMatrix<f64>,
    pub errors: DMatrix<f64>,
    pub projection: DMatrix<f64>,
    /// Full spectrum of `Cov(S_c)`, decreasing.
    pub spectrum: DVector<f64>,
}

/// Whether a (decreasing) retained spectrum passes the floor and the
/// condition-number cap.
fn spectrum_ok(values: &[f64], floor: f64, kappa_max: f64) -> bool {
    let (Some(&hi), Some(&lo)) = (values.first(), values.last()) else {
        return false;
    };
    lo >= floor && lo > 0.0 && hi / lo <= kappa_max
}

/// Projects centered states onto the leading `m` principal axes of
/// `Cov(S_c)`, with `m` the largest size whose retained spectra (of both
/// `Cov(S_c)` and the background covariance restricted to the same axes)
/// stay above `eig_floor * lambda_max` and below condition `kappa_max`.
pub fn regularize(
    centered_states: &DMatrix<f64>,
    error_mask: &[bool],
    kappa_max: f64,
    eig_floor: f64,
) -> Result<Regularized> {
    if !(kappa_max >= 1.0) {
        return Err(Error::InvalidInput("kappa_max must be >= 1".into()));
    }
    if !(eig_floor >= 0.0) {
        return Err(Error::InvalidInput("eigenvalue floor must be >= 0".into()));
    }
    let cov = covariance(centered_states);
    let (values, vectors) = sorted_eigen(&cov);
    let lambda_max = values.iter().copied().fold(0.0, f64::max);
    if !(lambda_max > 0.0) {
        return Err(Error::DegenerateData("state covariance is zero".into()));
    }
    let floor = eig_floor * lambda_max;
    let mut m0 = 0;
    while m0 < values.len() && spectrum_ok(&values.as_slice()[..=m0], floor, kappa_max) {
        m0 += 1;
    }
    if m0 == 0 {
        return Err(Error::DegenerateData("no eigenvalue above the floor".into()));
    }

    let background = select_rows(centered_states, |i| !error_mask[i]);
    let bg_cov = covariance(&background);
    let mut chosen = None;
    for m in (1..=m0).rev() {
        let h = vectors.columns(0, m).into_owned();
        let mut restricted = h.transpose() * &bg_cov * &h;
        symmetrize(&mut restricted);
        let (bg_values, _) = sorted_eigen(&restricted);
        if spectrum_ok(bg_values.as_slice(), floor, kappa_max) {
            chosen = Some(h);
            break;
        }
    }
    let projection = chosen.ok_or_else(|| {
        Error::DegenerateData("background covariance is singular on every retained subspace".into())
    })?;
    let states = centered_states * &projection;
    let errors = select_rows(&states, |i| error_mask[i]);
    Ok(Regularized {
        states,
        errors,
        projection,
        spectrum: values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Whitened {
    pub states: DMatrix<f64>,
    pub errors: DMatrix<f64>,
    pub whitener: DMatrix<f64>,
}

/// Multiplies by the symmetric inverse square root of `Cov(S_r)`.
pub fn whiten(reduced_states: &DMatrix<f64>, error_mask: &[bool]) -> Result<Whitened> {
    let cov = covariance(reduced_states);
    let scale = cov.diagonal().iter().copied().fold(0.0, f64::max);
    let whitener = inverse_sqrt(&cov, scale * 1e-14)?;
    let states = reduced_states * &whitener;
    let errors = select_rows(&states, |i| error_mask[i]);
    Ok(Whitened {
        states,
        errors,
        whitener,
    })
}

/// Fits the full preprocessing chain.
pub fn fit_preprocess(data: &LabeledStates, kappa_max: f64, eig_floor: f64) -> Result<PreprocessModel> {
    let c = center(data)?;
    let r = regularize(&c.states, data.error_mask(), kappa_max, eig_floor)?;
    let w = whiten(&r.states, data.error_mask())?;
    Ok(PreprocessModel {
        mean: c.mean,
        projection: r.projection,
        whitener: w.whitener,
    })
}
