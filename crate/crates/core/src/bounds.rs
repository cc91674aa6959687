//! Probability lower bounds for k-tuple separation.
//!
//! Three estimates are provided:
//!
//! * the uniform-ball bound, maximised over a feasible `(eps, delta)` grid;
//! * the correlated-cluster bound, maximised over `eps` only;
//! * the quotient-space (product distribution) bound, which is closed form
//!   and is exposed both as a maximal sample size and as a minimal failure
//!   probability.
//!
//! All products are accumulated in the log domain. A grid maximum is always
//! a valid lower bound, so coarser grids can only under-report.

use std::f64::consts::LN_2;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_one_minus, ln_one_minus_exp, scaled_log};

pub const DEFAULT_GRID_RESOLUTION: usize = 512;

/// Query for the uniform-ball bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallBoundQuery {
    /// Ambient dimension.
    pub n: usize,
    /// Background sample size.
    pub background: u64,
    /// Number of points to separate.
    pub k: usize,
    /// Cells per axis; the searched nodes are `i / grid_resolution` for
    /// `i = 1 .. grid_resolution - 1`, so doubling the resolution keeps every
    /// previous node.
    pub grid_resolution: usize,
}

impl BallBoundQuery {
    pub fn new(n: usize, background: u64, k: usize) -> Self {
        Self {
            n,
            background,
            k,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
        }
    }

    pub fn with_grid(mut self, grid_resolution: usize) -> Self {
        self.grid_resolution = grid_resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("n must be >= 2, got {}", self.n)));
        }
        if self.background < 1 {
            return Err(Error::InvalidInput("M must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidInput("grid resolution must be >= 2".into()));
        }
        Ok(())
    }
}

/// A point of the `(eps, delta)` search domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasiblePoint {
    pub eps: f64,
    pub delta: f64,
}

/// Maximised bound together with the grid node that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub p_lower: f64,
    pub log_p_lower: f64,
    pub eps: Option<f64>,
    /// Absent for the correlated bound, which has no `delta` parameter.
    pub delta: Option<f64>,
    /// The cap-volume term `Delta` at the witness.
    pub delta_value: Option<f64>,
    /// Set when no grid node satisfies the constraints.
    pub empty_feasible_set: bool,
}

impl BoundResult {
    fn empty() -> Self {
        Self {
            p_lower: 0.0,
            log_p_lower: f64::NEG_INFINITY,
            eps: None,
            delta: None,
            delta_value: None,
            empty_feasible_set: true,
        }
    }

    fn from_log(log_p: f64, eps: f64, delta: Option<f64>, delta_value: f64) -> Self {
        let log_p = log_p.min(0.0);
        Self {
            p_lower: log_p.exp(),
            log_p_lower: log_p,
            eps: Some(eps),
            delta,
            delta_value: Some(delta_value),
            empty_feasible_set: false,
        }
    }

    pub fn witness(&self) -> Option<FeasiblePoint> {
        match (self.eps, self.delta) {
            (Some(eps), Some(delta)) => Some(FeasiblePoint { eps, delta }),
            _ => None,
        }
    }
}

/// The constraint lines of the uniform-ball bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallConstraint {
    OpenInterval,
    SimplexRadius,
    NearOrthogonality,
    NonNegativeMargin,
}

impl BallConstraint {
    pub fn name(self) -> &'static str {
        match self {
            BallConstraint::OpenInterval => "delta, eps in (0,1)",
            BallConstraint::SimplexRadius => "1 - (k-1) delta^2 >= 0",
            BallConstraint::NearOrthogonality => "(k-1) (1-delta^2)^(n/2) <= 1",
            BallConstraint::NonNegativeMargin => {
                "(1-eps) sqrt(1-(k-1) delta^2) / sqrt(k) - sqrt(k-1) delta >= 0"
            }
        }
    }
}

/// `(1-eps) sqrt(1-(k-1) delta^2) / sqrt(k) - sqrt(k-1) delta`, the offset
/// of the separating functional. NaN when the radicand is negative.
pub fn ball_margin(eps: f64, delta: f64, k: usize) -> f64 {
    let km1 = (k - 1) as f64;
    let radicand = 1.0 - km1 * delta * delta;
    (1.0 - eps) * radicand.sqrt() / (k as f64).sqrt() - km1.sqrt() * delta
}

/// Returns the first violated constraint line, if any.
pub fn violated_ball_constraint(eps: f64, delta: f64, n: usize, k: usize) -> Option<BallConstraint> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Some(BallConstraint::OpenInterval);
    }
    violated_ball_constraint_closed(eps, delta, Some(n), k)
}

fn violated_ball_constraint_closed(
    eps: f64,
    delta: f64,
    n: Option<usize>,
    k: usize,
) -> Option<BallConstraint> {
    let km1 = (k - 1) as f64;
    if 1.0 - km1 * delta * delta < 0.0 {
        return Some(BallConstraint::SimplexRadius);
    }
    if let Some(n) = n {
        if k > 1 && km1.ln() + 0.5 * n as f64 * ln_one_minus(delta * delta) > 0.0 {
            return Some(BallConstraint::NearOrthogonality);
        }
    }
    if ball_margin(eps, delta, k) < 0.0 {
        return Some(BallConstraint::NonNegativeMargin);
    }
    None
}

/// True iff `(eps, delta)` satisfies every constraint line of the ball bound
/// for dimension `n` and tuple size `k`.
pub fn feasible_ball(eps: f64, delta: f64, n: usize, k: usize) -> bool {
    k >= 1 && violated_ball_constraint(eps, delta, n, k).is_none()
}

/// Cap-volume term `Delta(eps, delta, k) = 1 - margin^2`.
///
/// Accepts the closed square `[0,1]^2` so analytic corners can be evaluated;
/// the `n`-dependent line is checked by the bound itself.
pub fn delta_ball(eps: f64, delta: f64, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if !((0.0..=1.0).contains(&eps) && (0.0..=1.0).contains(&delta)) {
        return Err(Error::ConstraintViolation(BallConstraint::OpenInterval.name()));
    }
    if let Some(c) = violated_ball_constraint_closed(eps, delta, None, k) {
        return Err(Error::ConstraintViolation(c.name()));
    }
    let a = ball_margin(eps, delta, k);
    // (1 - a)(1 + a) avoids cancellation when a is close to one.
    Ok(((1.0 - a) * (1.0 + a)).clamp(0.0, 1.0))
}

/// `ln` of the first factor, `k ln(1 - (1-eps)^n)`.
fn ln_shell_factor(n: usize, k: usize, eps: f64) -> f64 {
    let ln_inner = n as f64 * ln_one_minus(eps);
    scaled_log(k as f64, ln_one_minus_exp(ln_inner))
}

/// `ln` of `prod_{j=1}^{k-1} (1 - j (1-delta^2)^{n/2})`; `-inf` when any
/// factor is non-positive.
fn ln_orthogonality_factor(n: usize, k: usize, delta: f64) -> f64 {
    let half_n_ln = 0.5 * n as f64 * ln_one_minus(delta * delta);
    let mut acc = 0.0;
    for j in 1..k {
        let arg = (j as f64).ln() + half_n_ln;
        if arg >= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += ln_one_minus_exp(arg);
    }
    acc
}

/// `ln` of `(1 - Delta^{n/2} / 2)^M`.
fn ln_cap_factor(n: usize, background: f64, delta_value: f64) -> f64 {
    if delta_value > 1.0 {
        return f64::NEG_INFINITY;
    }
    let arg = 0.5 * n as f64 * delta_value.ln() - LN_2;
    if arg >= 0.0 {
        return if background == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    scaled_log(background, ln_one_minus_exp(arg))
}

/// Log of the three-factor product of the ball bound at a single point.
/// Returns `-inf` for infeasible points or when any factor degenerates.
pub fn log_p1_ball(n: usize, background: u64, k: usize, point: FeasiblePoint) -> f64 {
    let FeasiblePoint { eps, delta } = point;
    if k < 1 || violated_ball_constraint(eps, delta, n, k).is_some() {
        return f64::NEG_INFINITY;
    }
    let Ok(dv) = delta_ball(eps, delta, k) else {
        return f64::NEG_INFINITY;
    };
    ln_shell_factor(n, k, eps)
        + ln_orthogonality_factor(n, k, delta)
        + ln_cap_factor(n, background as f64, dv)
}

/// Interior grid nodes `i / resolution`, `i = 1 .. resolution - 1`.
pub fn grid_nodes(resolution: usize) -> Vec<f64> {
    (1..resolution).map(|i| i as f64 / resolution as f64).collect()
}

/// Picks the larger value; ties keep the earlier candidate.
fn better(a: Option<(f64, usize, usize)>, b: Option<(f64, usize, usize)>) -> Option<(f64, usize, usize)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Grid maximisation of the ball bound over feasible `(eps, delta)`.
pub fn p1_ball_lower(query: &BallBoundQuery) -> Result<BoundResult> {
    query.validate()?;
    let BallBoundQuery {
        n,
        background,
        k,
        grid_resolution,
    } = *query;
    let nodes = grid_nodes(grid_resolution);
    let background = background as f64;

    // The delta axis is irrelevant for k = 1; searching only its first node
    // leaves the maximum unchanged.
    let delta_nodes: &[f64] = if k == 1 { &nodes[..1] } else { &nodes };
    let ortho: Vec<f64> = delta_nodes
        .iter()
        .map(|&d| {
            if violated_ball_constraint_closed(0.0, d, Some(n), k)
                .is_some_and(|c| c != BallConstraint::NonNegativeMargin)
            {
                f64::NEG_INFINITY
            } else {
                ln_orthogonality_factor(n, k, d)
            }
        })
        .collect();

    let best = nodes
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let shell = ln_shell_factor(n, k, eps);
            let mut row_best: Option<(f64, usize, usize)> = None;
            for (j, &delta) in delta_nodes.iter().enumerate() {
                if ortho[j] == f64::NEG_INFINITY {
                    continue;
                }
                let a = ball_margin(eps, delta, k);
                if !(a >= 0.0) {
                    continue;
                }
                let dv = ((1.0 - a) * (1.0 + a)).clamp(0.0, 1.0);
                let v = shell + ortho[j] + ln_cap_factor(n, background, dv);
                if v == f64::NEG_INFINITY || v.is_nan() {
                    continue;
                }
                row_best = better(row_best, Some((v, i, j)));
            }
            row_best
        })
        .reduce(|| None, better);

    Ok(match best {
        None => BoundResult::empty(),
        Some((v, i, j)) => {
            let (eps, delta) = (nodes[i], delta_nodes[j]);
            let dv = delta_ball(eps, delta, k)?;
            BoundResult::from_log(v, eps, Some(delta), dv)
        }
    })
}

/// Query for the correlated-cluster bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrBoundQuery {
    pub n: usize,
    pub background: u64,
    /// Size of the whole error set; the exponent of the shell factor.
    pub k: usize,
    /// Cardinality of the correlated cluster being separated.
    pub cluster: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub grid_resolution: usize,
}

impl CorrBoundQuery {
    pub fn new(n: usize, background: u64, k: usize, cluster: usize, beta1: f64, beta2: f64) -> Self {
        Self {
            n,
            background,
            k,
            cluster,
            beta1,
            beta2,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
        }
    }

    pub fn with_grid(mut self, grid_resolution: usize) -> Self {
        self.grid_resolution = grid_resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.background < 1 || self.k < 1 {
            return Err(Error::InvalidInput("n >= 2, M >= 1, k >= 1 required".into()));
        }
        if self.cluster < 1 || self.cluster > self.k {
            return Err(Error::InvalidInput(format!(
                "cluster size must satisfy 1 <= m <= k, got m={} k={}",
                self.cluster, self.k
            )));
        }
        if !(self.beta1 >= self.beta2) {
            return Err(Error::InvalidInput("beta1 must be >= beta2".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidInput("grid resolution must be >= 2".into()));
        }
        if !(1.0 + (self.cluster - 1) as f64 * self.beta1 > 0.0) {
            return Err(Error::ConstraintViolation(CORR_BETA1_CONSTRAINT));
        }
        Ok(())
    }
}

const CORR_BETA1_CONSTRAINT: &str = "1 + (m-1) beta1 > 0";
const CORR_BETA2_CONSTRAINT: &str = "(1-eps)^2 + beta2 (m-1) > 0";

/// Cap-volume term of the correlated bound,
/// `1 - ((1-eps)^2 + beta2 (m-1))^2 / (m (1 + (m-1) beta1))`, clamped below
/// at zero.
pub fn delta_corr(eps: f64, m: usize, beta1: f64, beta2: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidInput("cluster size must be >= 1".into()));
    }
    let mm1 = (m - 1) as f64;
    let num = (1.0 - eps).powi(2) + beta2 * mm1;
    let den = 1.0 + mm1 * beta1;
    if !(num > 0.0) {
        return Err(Error::ConstraintViolation(CORR_BETA2_CONSTRAINT));
    }
    if !(den > 0.0) {
        return Err(Error::ConstraintViolation(CORR_BETA1_CONSTRAINT));
    }
    let ratio = num * num / (m as f64 * den);
    Ok((1.0 - ratio).max(0.0))
}

/// Log of the correlated bound at a single `eps`.
pub fn log_p1_corr(query: &CorrBoundQuery, eps: f64) -> f64 {
    let Ok(dv) = delta_corr(eps, query.cluster, query.beta1, query.beta2) else {
        return f64::NEG_INFINITY;
    };
    if !(eps > 0.0 && eps < 1.0) {
        return f64::NEG_INFINITY;
    }
    ln_shell_factor(query.n, query.k, eps) + ln_cap_factor(query.n, query.background as f64, dv)
}

/// Grid maximisation of the correlated bound over `eps`.
pub fn p1_corr_lower(query: &CorrBoundQuery) -> Result<BoundResult> {
    query.validate()?;
    let nodes = grid_nodes(query.grid_resolution);
    let best = nodes
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let v = log_p1_corr(query, eps);
            (v > f64::NEG_INFINITY).then_some((v, i, 0))
        })
        .reduce(|| None, better);
    Ok(match best {
        None => BoundResult::empty(),
        Some((v, i, _)) => {
            let eps = nodes[i];
            let dv = delta_corr(eps, query.cluster, query.beta1, query.beta2)?;
            BoundResult::from_log(v, eps, None, dv)
        }
    })
}

/// Query for the quotient-space bound on product distributions in the cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientBoundQuery {
    pub n: usize,
    pub k: usize,
    /// Lower bound on the coordinate spreads, entering the exponent as
    /// `sigma0^4`.
    pub sigma0: f64,
    /// Admissible failure probability.
    pub theta: f64,
}

impl QuotientBoundQuery {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k >= self.n {
            return Err(Error::InvalidInput(format!(
                "quotient bound needs 1 <= k < n, got k={} n={}",
                self.k, self.n
            )));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::InvalidInput("sigma0 must be > 0".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidInput("theta must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// Exponent `(n - k + 1) sigma0^4 / 2`.
fn quotient_exponent(n: usize, k: usize, sigma0: f64) -> f64 {
    (n - k + 1) as f64 * sigma0.powi(4) / 2.0
}

/// Largest background size `M` covered by the quotient bound at failure
/// probability `theta`, i.e. `floor(theta/3 exp(E)) - 1`; `None` when that is
/// below one. Saturates at `u64::MAX`.
pub fn quotient_max_m(query: &QuotientBoundQuery) -> Result<Option<u64>> {
    query.validate()?;
    let ln_x = (query.theta / 3.0).ln() + quotient_exponent(query.n, query.k, query.sigma0);
    if ln_x < LN_2 {
        return Ok(None);
    }
    if ln_x >= 64.0 * LN_2 {
        return Ok(Some(u64::MAX));
    }
    let x = ln_x.exp().floor();
    let m = x - 1.0;
    Ok((m >= 1.0).then_some(m as u64))
}

/// Smallest failure probability for which `background` is covered:
/// `3 (M + 1) exp(-E)`, clamped to `(0, 1]`.
pub fn quotient_min_theta(n: usize, k: usize, sigma0: f64, background: u64) -> Result<f64> {
    if k < 1 || k >= n {
        return Err(Error::InvalidInput("quotient bound needs 1 <= k < n".into()));
    }
    if !(sigma0 > 0.0) {
        return Err(Error::InvalidInput("sigma0 must be > 0".into()));
    }
    let ln_theta = 3f64.ln() + (background as f64 + 1.0).ln() - quotient_exponent(n, k, sigma0);
    Ok(ln_theta.min(0.0).exp().max(f64::MIN_POSITIVE))
}

/// How the cluster size of a correlated curve tracks `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterSize {
    /// The whole error set is one correlated cluster (`m = k`).
    FollowK,
    /// A fixed cluster, capped at `k`.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveSpec {
    Ball(BallBoundQuery),
    Corr { base: CorrBoundQuery, cluster: ClusterSize },
}

/// One bound per `k` in the range. Infeasible entries carry `p_lower = 0`.
pub fn bound_curve(spec: &CurveSpec, k_range: RangeInclusive<usize>) -> Result<Vec<(usize, BoundResult)>> {
    k_range
        .map(|k| {
            let result = match *spec {
                CurveSpec::Ball(base) => p1_ball_lower(&BallBoundQuery { k, ..base })?,
                CurveSpec::Corr { base, cluster } => {
                    let m = match cluster {
                        ClusterSize::FollowK => k,
                        ClusterSize::Fixed(m) => m.min(k),
                    };
                    p1_corr_lower(&CorrBoundQuery {
                        k,
                        cluster: m,
                        ..base
                    })?
                }
            };
            Ok((k, result))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn k1_makes_delta_constraints_vacuous() {
        assert!(feasible_ball(0.5, 1e-9, 2000, 1));
        assert!(feasible_ball(0.5, 0.999, 2000, 1));
    }

    #[test]
    fn simplex_radius_violation() {
        assert!(!feasible_ball(0.1, 0.9, 10, 5));
        assert_eq!(
            violated_ball_constraint(0.1, 0.9, 10, 5),
            Some(BallConstraint::SimplexRadius)
        );
    }

    #[test]
    fn n2000_k9_example_point() {
        // Line by line, in exact terms:
        //   1 - 8 * 0.0004 = 0.9968 >= 0
        //   ln 8 + 1000 ln(0.9996) = 2.0794 - 0.40008 > 0  -> violated
        assert!(!feasible_ball(0.05, 0.02, 2000, 9));
        assert_eq!(
            violated_ball_constraint(0.05, 0.02, 2000, 9),
            Some(BallConstraint::NearOrthogonality)
        );
        // with delta large enough for near-orthogonality the margin line binds
        assert!(feasible_ball(0.05, 0.06, 2000, 9));
        assert!(!feasible_ball(0.05, 0.2, 2000, 9));
    }

    #[test]
    fn open_interval_rejected() {
        assert!(!feasible_ball(0.0, 0.1, 100, 2));
        assert!(!feasible_ball(0.1, 1.0, 100, 2));
    }

    #[test]
    fn delta_ball_corners() {
        assert_eq!(delta_ball(0.0, 0.0, 1).unwrap(), 0.0);
        for &eps in &[0.01, 0.3, 0.77] {
            let expected = 1.0 - (1.0 - eps) * (1.0 - eps);
            assert_relative_eq!(delta_ball(eps, 0.4, 1).unwrap(), expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn delta_ball_names_violated_line() {
        match delta_ball(0.1, 0.9, 5) {
            Err(Error::ConstraintViolation(name)) => assert!(name.contains("1 - (k-1)")),
            other => panic!("unexpected {other:?}"),
        }
        match delta_ball(0.9, 0.3, 4) {
            Err(Error::ConstraintViolation(name)) => assert!(name.contains("sqrt(k)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn log_p1_ball_k1_m0_is_shell_only() {
        for &eps in &[0.001, 0.01, 0.2] {
            let v = log_p1_ball(300, 0, 1, FeasiblePoint { eps, delta: 0.5 });
            let expected = (1.0 - (1.0 - eps).powi(300)).ln();
            assert_relative_eq!(v, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_p1_ball_infeasible_is_neg_inf() {
        assert_eq!(
            log_p1_ball(10, 5, 5, FeasiblePoint { eps: 0.1, delta: 0.9 }),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn low_dimension_collapses_bound() {
        let r = p1_ball_lower(&BallBoundQuery::new(2, 1_000_000, 1)).unwrap();
        assert!(r.p_lower < 1e-100, "{r:?}");
    }

    #[test]
    fn delta_corr_reductions() {
        for &eps in &[0.0f64, 0.05, 0.5] {
            let expected = 1.0 - (1.0 - eps).powi(4);
            assert_relative_eq!(delta_corr(eps, 1, 3.0, -7.0).unwrap(), expected, epsilon = 1e-15);
        }
        assert_eq!(delta_corr(0.0, 1, 0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_corr_clamps_at_zero() {
        // num = 0.81 + 2*4 = 8.81; m den = 5 * 3 = 15; num^2 / 15 > 1
        assert_eq!(delta_corr(0.1, 5, 0.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_corr_constraints() {
        assert!(matches!(
            delta_corr(0.5, 3, 0.5, -1.0),
            Err(Error::ConstraintViolation(CORR_BETA2_CONSTRAINT))
        ));
        assert!(matches!(
            delta_corr(0.5, 3, -0.6, -1.0 + 1e-9).unwrap_err(),
            Error::ConstraintViolation(_)
        ));
    }

    #[test]
    fn quotient_examples() {
        let q = QuotientBoundQuery {
            n: 1100,
            k: 100,
            sigma0: 0.5,
            theta: 0.01,
        };
        // E = 1001 * 0.0625 / 2 = 31.28125
        let e: f64 = 31.28125;
        let expected = ((0.01 / 3.0) * e.exp()).floor() - 1.0;
        assert_eq!(quotient_max_m(&q).unwrap(), Some(expected as u64));
        assert!(expected > 1e10);

        let q3 = QuotientBoundQuery { sigma0: 0.3, ..q };
        assert_eq!(quotient_max_m(&q3).unwrap(), None);
    }

    #[test]
    fn quotient_min_theta_examples() {
        let e: f64 = 31.28125;
        let t0 = quotient_min_theta(1100, 100, 0.5, 0).unwrap();
        assert_relative_eq!(t0, 3.0 * (-e).exp(), max_relative = 1e-13);
        let t1 = quotient_min_theta(1100, 100, 0.5, 1).unwrap();
        assert_relative_eq!(t1, 2.0 * t0, max_relative = 1e-13);
        let t6 = quotient_min_theta(1100, 100, 0.5, 1_000_000).unwrap();
        assert_relative_eq!(t6, 3.0 * 1_000_001.0 * (-e).exp(), max_relative = 1e-12);
        assert_eq!(quotient_min_theta(10, 2, 0.1, 1000).unwrap(), 1.0);
    }

    #[test]
    fn single_point_curve_matches_scalar() {
        let base = BallBoundQuery::new(500, 1000, 1).with_grid(64);
        let curve = bound_curve(&CurveSpec::Ball(base), 3..=3).unwrap();
        let scalar = p1_ball_lower(&BallBoundQuery { k: 3, ..base }).unwrap();
        assert_eq!(curve, vec![(3, scalar)]);
    }

    #[test]
    fn empty_feasible_set_flagged() {
        // n = 2, k = 3: near-orthogonality needs 2 (1 - d^2) <= 1, the simplex
        // line needs 2 d^2 <= 1, so only d = 1/sqrt 2 survives and it is off-grid.
        let r = p1_ball_lower(&BallBoundQuery::new(2, 10, 3).with_grid(16)).unwrap();
        assert!(r.empty_feasible_set);
        assert_eq!(r.p_lower, 0.0);
    }
}
