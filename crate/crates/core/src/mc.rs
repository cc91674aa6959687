//! Monte Carlo estimates of the separation probability.
//!
//! Each trial draws a fresh background and error set from its own ChaCha
//! stream (`stream = trial index`), so results do not depend on how trials
//! are scheduled across threads.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::lp::{lp_separability, Separability};
use crate::sampling::{ball_points, cube_points, rng_stream, VarianceSpec};
use crate::separators::{mean_separator, quotient_separator, thm1_separator, MeanMode};

/// Tolerance on the error-set side when re-verifying a separator.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialDistribution {
    Ball,
    Cube(VarianceSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparatorKind {
    Mean,
    Thm1,
    Quotient,
    Lp,
}

impl SeparatorKind {
    pub fn name(self) -> &'static str {
        match self {
            SeparatorKind::Mean => "mean",
            SeparatorKind::Thm1 => "thm1",
            SeparatorKind::Quotient => "quotient",
            SeparatorKind::Lp => "lp",
        }
    }
}

impl std::str::FromStr for SeparatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(SeparatorKind::Mean),
            "thm1" => Ok(SeparatorKind::Thm1),
            "quotient" => Ok(SeparatorKind::Quotient),
            "lp" => Ok(SeparatorKind::Lp),
            other => Err(Error::InvalidInput(format!("unknown separator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub distribution: TrialDistribution,
    pub n: usize,
    pub background: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub separator: SeparatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialOutcome {
    Separated,
    NotSeparated,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub trials: usize,
    pub successes: usize,
    /// Trials with an indeterminate oracle status, left out of `p_hat`.
    pub excluded: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McResult {
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let trials = outcomes.len();
        let successes = outcomes.iter().filter(|o| **o == TrialOutcome::Separated).count();
        let excluded = outcomes
            .iter()
            .filter(|o| **o == TrialOutcome::Indeterminate)
            .count();
        let (p_hat, ci_low, ci_high) = wilson_interval(successes, trials - excluded);
        Self {
            trials,
            successes,
            excluded,
            p_hat,
            ci_low,
            ci_high,
        }
    }

    /// Binomial standard error `sqrt(p (1-p) / trials)` of the estimate.
    pub fn std_error(&self) -> f64 {
        let used = (self.trials - self.excluded).max(1) as f64;
        (self.p_hat * (1.0 - self.p_hat) / used).sqrt()
    }
}

/// Wilson score interval at 95%; an empty sample gives `(0, 0, 1)`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64, f64) {
    if trials == 0 {
        return (0.0, 0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((p), (centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        if self.n < 1 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if self.separator == SeparatorKind::Quotient && self.k >= self.n {
            return Err(Error::InvalidInput("quotient separator needs k < n".into()));
        }
        Ok(())
    }

    /// Background and error set of trial `index`.
    pub fn draw(&self, index: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let mut rng = rng_stream(self.seed, index as u64);
        Ok(match &self.distribution {
            TrialDistribution::Ball => {
                let bg = ball_points(self.n, self.background, &mut rng);
                let y = ball_points(self.n, self.k, &mut rng);
                (bg, y)
            }
            TrialDistribution::Cube(spec) => {
                let bg = cube_points(self.n, self.background, spec, &mut rng)?;
                let y = cube_points(self.n, self.k, spec, &mut rng)?;
                (bg, y)
            }
        })
    }
}

/// Candidate functional of a constructive separator; `None` when the
/// construction itself fails (counted as not separated).
pub fn construct(kind: SeparatorKind, background: &DMatrix<f64>, y: &DMatrix<f64>) -> Option<LinearFunctional> {
    match kind {
        SeparatorKind::Mean => mean_separator(y, MeanMode::Algorithmic).ok(),
        SeparatorKind::Thm1 => thm1_separator(y).ok().map(|s| s.functional),
        SeparatorKind::Quotient => quotient_separator(background, y).ok().map(|s| s.functional),
        SeparatorKind::Lp => None,
    }
}

/// Outcome of one trial under the given separator.
pub fn evaluate(kind: SeparatorKind, background: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<TrialOutcome> {
    if y.nrows() == 0 {
        return Ok(TrialOutcome::Separated);
    }
    if kind == SeparatorKind::Lp {
        return Ok(match lp_separability(background, y)? {
            Separability::Separable { witness, .. } => {
                if witness.separates(y, background, MEMBERSHIP_TOL) {
                    TrialOutcome::Separated
                } else {
                    TrialOutcome::Indeterminate
                }
            }
            Separability::NotSeparable { .. } => TrialOutcome::NotSeparated,
            Separability::Indeterminate(_) => TrialOutcome::Indeterminate,
        });
    }
    Ok(match construct(kind, background, y) {
        Some(f) if f.separates(y, background, MEMBERSHIP_TOL) => TrialOutcome::Separated,
        _ => TrialOutcome::NotSeparated,
    })
}

/// Per-trial outcomes in trial order.
pub fn trial_outcomes(config: &TrialConfig) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let (bg, y) = config.draw(i)?;
            evaluate(config.separator, &bg, &y)
        })
        .collect()
}

pub fn run_trials(config: &TrialConfig) -> Result<McResult> {
    Ok(McResult::from_outcomes(&trial_outcomes(config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(separator: SeparatorKind, k: usize) -> TrialConfig {
        TrialConfig {
            distribution: TrialDistribution::Ball,
            n: 30,
            background: 100,
            k,
            trials: 12,
            seed: 5,
            separator,
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for &(s, n) in &[(0, 10), (10, 10), (3, 7), (1, 1), (0, 1)] {
            let (p, lo, hi) = wilson_interval(s, n);
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        let (p, lo, hi) = wilson_interval(1, 1);
        assert_eq!(p, 1.0);
        assert!(lo < 0.25 && hi == 1.0);
    }

    #[test]
    fn empty_error_set_counts_as_separated() {
        let r = run_trials(&cfg(SeparatorKind::Lp, 0)).unwrap();
        assert_eq!(r.successes, r.trials);
        assert_eq!(r.p_hat, 1.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = run_trials(&cfg(SeparatorKind::Mean, 2)).unwrap();
        let b = run_trials(&cfg(SeparatorKind::Mean, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn draws_do_not_depend_on_separator() {
        let a = cfg(SeparatorKind::Mean, 2).draw(3).unwrap();
        let b = cfg(SeparatorKind::Lp, 2).draw(3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_zero_trials() {
        let mut c = cfg(SeparatorKind::Mean, 1);
        c.trials = 0;
        assert!(run_trials(&c).is_err());
    }
}
