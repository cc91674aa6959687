//! Explicit separating functionals built from the error set alone.
//!
//! These are the constructive counterparts of the bounds: the mean-direction
//! functional for correlated clusters, the orthogonalised-simplex functional
//! for near-orthogonal tuples, and the quotient functional for product laws.

use nalgebra::{DMatrix, DVector};

use crate::bounds::{ball_margin, BallConstraint};
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::numeric::ln_one_minus;

/// Offset rule for [`mean_separator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanMode {
    /// Offset at the smallest projection of the set, so every member scores
    /// `>= 0`.
    Algorithmic,
    /// Offset `((1-eps)^2 + beta2 (m-1)) / (sqrt(m) sqrt(1 + (m-1) beta1))`;
    /// parameters are estimated from the set when `None`.
    Theorem(Option<ClusterParams>),
}

/// Shell width and pairwise-correlation constants of a cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub eps: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl ClusterParams {
    /// `eps = 1 - min |y|`; `beta1`/`beta2` are the largest/smallest average
    /// inner product of a member with the others (zero for singletons).
    pub fn estimate(points: &DMatrix<f64>) -> Self {
        let k = points.nrows();
        let min_norm = points
            .row_iter()
            .map(|r| r.norm())
            .fold(f64::INFINITY, f64::min);
        let (beta1, beta2) = correlation_constants(points);
        debug_assert!(k > 0);
        Self {
            eps: 1.0 - min_norm,
            beta1,
            beta2,
        }
    }
}

/// Tightest `(beta1, beta2)` with
/// `beta2 (m-1) <= sum_{j != i} <x_i, x_j> <= beta1 (m-1)` for every member.
/// Singletons return `(0, 0)`.
pub fn correlation_constants(points: &DMatrix<f64>) -> (f64, f64) {
    let m = points.nrows();
    if m < 2 {
        return (0.0, 0.0);
    }
    let gram = points * points.transpose();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..m {
        let s: f64 = (0..m).filter(|&j| j != i).map(|j| gram[(i, j)]).sum();
        let avg = s / (m - 1) as f64;
        hi = hi.max(avg);
        lo = lo.min(avg);
    }
    (hi, lo)
}

/// Functional along the mean direction of `y`.
pub fn mean_separator(y: &DMatrix<f64>, mode: MeanMode) -> Result<LinearFunctional> {
    let m = y.nrows();
    if m == 0 {
        return Err(Error::InvalidInput("mean separator needs a nonempty set".into()));
    }
    let mean: DVector<f64> = y.row_sum().transpose() / m as f64;
    let norm = mean.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateDirection("set mean is the zero vector".into()));
    }
    let direction = mean / norm;
    let offset = match mode {
        MeanMode::Algorithmic => {
            // The offset is taken from the stored (renormalised) direction so
            // the tightest member evaluates to exactly zero.
            let f = LinearFunctional::new(direction, 0.0)?;
            let offset = f.eval_rows(y).min();
            return Ok(LinearFunctional::from_raw_parts(f.direction().clone(), offset));
        }
        MeanMode::Theorem(params) => {
            let ClusterParams { eps, beta1, beta2 } = params.unwrap_or_else(|| ClusterParams::estimate(y));
            let mm1 = (m - 1) as f64;
            let den = 1.0 + mm1 * beta1;
            if !(den > 0.0) {
                return Err(Error::ConstraintViolation("1 + (m-1) beta1 > 0"));
            }
            ((1.0 - eps).powi(2) + beta2 * mm1) / ((m as f64).sqrt() * den.sqrt())
        }
    };
    LinearFunctional::new(direction, offset)
}

/// Why the simplex construction was abandoned for the mean functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fallback {
    Infeasible(BallConstraint),
    OrthogonalizationBreakdown,
    /// The constructed functional left a member on the negative side.
    MembershipViolated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSeparator {
    pub functional: LinearFunctional,
    /// Estimated shell width `1 - min |y|`.
    pub eps: f64,
    /// Estimated near-orthogonality `(1 - eps) max |cos|`.
    pub delta: f64,
    pub fallback: Option<Fallback>,
}

/// Functional through the averaged direction of an orthogonalised copy of
/// the tuple, offset by the simplex margin minus the orthogonality slack.
///
/// The orthogonal surrogate is obtained by modified Gram-Schmidt in row
/// order. When the estimated `(eps, delta)` violates a constraint line, the
/// surrogate breaks down, or a member lands on the negative side, the
/// algorithmic mean functional is returned and the reason is recorded.
pub fn thm1_separator(y: &DMatrix<f64>) -> Result<SimplexSeparator> {
    let (k, n) = y.shape();
    if k == 0 {
        return Err(Error::InvalidInput("simplex separator needs a nonempty set".into()));
    }
    let norms: Vec<f64> = y.row_iter().map(|r| r.norm()).collect();
    if norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput("simplex separator needs nonzero points".into()));
    }
    let radius = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = 1.0 - radius;
    if k == 1 {
        return Ok(SimplexSeparator {
            functional: mean_separator(y, MeanMode::Algorithmic)?,
            eps,
            delta: 0.0,
            fallback: None,
        });
    }

    let mut max_cos: f64 = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let c = y.row(i).dot(&y.row(j)) / (norms[i] * norms[j]);
            max_cos = max_cos.max(c.abs());
        }
    }
    let delta = radius * max_cos;

    let fallback = |reason| -> Result<SimplexSeparator> {
        Ok(SimplexSeparator {
            functional: mean_separator(y, MeanMode::Algorithmic)?,
            eps,
            delta,
            fallback: Some(reason),
        })
    };

    if let Some(c) = simplex_violation(eps, delta, n, k) {
        return fallback(Fallback::Infeasible(c));
    }

    // Orthonormal surrogate of the rescaled points x_hat_i = radius x_i / |x_i|.
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    for (i, row) in y.row_iter().enumerate() {
        let mut h: DVector<f64> = row.transpose() * (radius / norms[i]);
        for e in &basis {
            let coef = e.dot(&h);
            h.axpy(-coef, e, 1.0);
        }
        let hn = h.norm();
        if !(hn > 1e-12 * radius) {
            return fallback(Fallback::OrthogonalizationBreakdown);
        }
        basis.push(h / hn);
    }
    // Every scaled vertex has the same norm, so the averaged direction is the
    // normalised sum of the orthonormal surrogate.
    let mut direction = DVector::zeros(n);
    for e in &basis {
        direction += e;
    }
    let offset = ball_margin(eps, delta, k);
    let offset = if offset.is_nan() { f64::NEG_INFINITY } else { offset };
    let functional = LinearFunctional::new(direction, offset)?;
    if functional.eval_rows(y).iter().any(|&v| v < 0.0) {
        return fallback(Fallback::MembershipViolated);
    }
    Ok(SimplexSeparator {
        functional,
        eps,
        delta,
        fallback: None,
    })
}

/// Constraint check with closed endpoints: estimated parameters may sit
/// exactly at zero.
fn simplex_violation(eps: f64, delta: f64, n: usize, k: usize) -> Option<BallConstraint> {
    if !((0.0..1.0).contains(&eps) && (0.0..1.0).contains(&delta)) {
        return Some(BallConstraint::OpenInterval);
    }
    let km1 = (k - 1) as f64;
    if 1.0 - km1 * delta * delta < 0.0 {
        return Some(BallConstraint::SimplexRadius);
    }
    if k > 1 && km1.ln() + 0.5 * n as f64 * ln_one_minus(delta * delta) > 0.0 {
        return Some(BallConstraint::NearOrthogonality);
    }
    if ball_margin(eps, delta, k) < 0.0 {
        return Some(BallConstraint::NonNegativeMargin);
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSeparator {
    /// `(<u, Px> - <u, center> - r0 / sqrt 2)` with unit `u`; positive
    /// multiples of the scaled functional share its sign pattern.
    pub functional: LinearFunctional,
    /// Projected background mean.
    pub center: DVector<f64>,
    /// Root of the summed projected coordinate variances.
    pub r0: f64,
    /// Dimension of the span that was factored out.
    pub collapsed_rank: usize,
}

/// Orthonormal basis of the row span of `vectors` (modified Gram-Schmidt,
/// dropping directions whose residual falls below `tol` relative to the
/// largest input norm).
pub fn orthonormal_span(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    if scale == 0.0 {
        return basis;
    }
    for v in vectors {
        let mut h = v.clone();
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for e in &basis {
                let coef = e.dot(&h);
                h.axpy(-coef, e, 1.0);
            }
        }
        let hn = h.norm();
        if hn > tol * scale {
            basis.push(h / hn);
        }
    }
    basis
}

fn project_out(basis: &[DVector<f64>], x: &DVector<f64>) -> DVector<f64> {
    let mut p = x.clone();
    for e in basis {
        let coef = e.dot(&p);
        p.axpy(-coef, e, 1.0);
    }
    p
}

/// Separator in the quotient by the span of the error-set differences,
/// where the whole error set collapses to one point.
pub fn quotient_separator(background: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<QuotientSeparator> {
    let (k, n) = y.shape();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "quotient separator needs 1 <= k < n, got k={k} n={n}"
        )));
    }
    if background.nrows() == 0 {
        return Err(Error::InvalidInput("quotient separator needs background points".into()));
    }
    if background.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: background.ncols(),
        });
    }
    let anchor: DVector<f64> = y.row(0).transpose();
    let diffs: Vec<DVector<f64>> = (1..k).map(|j| y.row(j).transpose() - &anchor).collect();
    let basis = orthonormal_span(&diffs, 1e-10);

    let projected: Vec<DVector<f64>> = background
        .row_iter()
        .map(|r| project_out(&basis, &r.transpose()))
        .collect();
    let count = projected.len() as f64;
    let mut center = DVector::zeros(n);
    for p in &projected {
        center += p;
    }
    center /= count;
    let r0 = (projected.iter().map(|p| (p - &center).norm_squared()).sum::<f64>() / count).sqrt();
    if !(r0 > 0.0) {
        return Err(Error::DegenerateData("projected background has zero spread".into()));
    }

    let target = project_out(&basis, &anchor) - &center;
    let tn = target.norm();
    if !(tn > 0.0) {
        return Err(Error::DegenerateDirection(
            "projected error point coincides with the background mean".into(),
        ));
    }
    let u = target / tn;
    let direction = project_out(&basis, &u);
    let offset = u.dot(&center) + r0 / std::f64::consts::SQRT_2;
    Ok(QuotientSeparator {
        functional: LinearFunctional::from_unnormalized(direction, offset)?,
        center,
        r0,
        collapsed_rank: basis.len(),
    })
}
