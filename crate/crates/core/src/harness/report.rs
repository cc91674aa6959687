use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    bound_curve, p1_ball_lower, quotient_min_theta, BallBoundQuery, ClusterSize, CorrBoundQuery, CurveSpec,
    DEFAULT_GRID_RESOLUTION,
};
use crate::error::Result;
use crate::io::CsvTable;
use crate::mc::{run_trials, McResult, SeparatorKind, TrialConfig, TrialDistribution};
use crate::numeric::fmt17;

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// A bound curve to tabulate.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveConfig {
    Ball {
        n: usize,
        background: u64,
        grid: usize,
    },
    /// One series per `(beta1, beta2)` pair; the whole error set is one
    /// cluster.
    Corr {
        n: usize,
        background: u64,
        grid: usize,
        settings: Vec<(f64, f64)>,
    },
}

/// CSV of the bound as a function of `k`: `k,p_lower,eps,delta` for the
/// ball; `k,p_lower,eps` for a single correlated setting, and
/// `beta1,beta2,k,p_lower,eps` when several settings are stacked. An empty
/// range gives a header-only table.
pub fn emit_bound_curve(config: &CurveConfig, ks: RangeInclusive<usize>) -> Result<CsvTable> {
    match config {
        CurveConfig::Ball { n, background, grid } => {
            let spec = CurveSpec::Ball(BallBoundQuery::new(*n, *background, 1).with_grid(*grid));
            let mut t = CsvTable::new(&["k", "p_lower", "eps", "delta"]);
            for (k, r) in bound_curve(&spec, ks)? {
                t.push(vec![k.to_string(), fmt17(r.p_lower), opt17(r.eps), opt17(r.delta)]);
            }
            Ok(t)
        }
        CurveConfig::Corr {
            n,
            background,
            grid,
            settings,
        } => {
            let stacked = settings.len() != 1;
            let mut t = if stacked {
                CsvTable::new(&["beta1", "beta2", "k", "p_lower", "eps"])
            } else {
                CsvTable::new(&["k", "p_lower", "eps"])
            };
            for &(beta1, beta2) in settings {
                let spec = CurveSpec::Corr {
                    base: CorrBoundQuery::new(*n, *background, 1, 1, beta1, beta2).with_grid(*grid),
                    cluster: ClusterSize::FollowK,
                };
                for (k, r) in bound_curve(&spec, ks.clone())? {
                    let mut row = Vec::with_capacity(5);
                    if stacked {
                        row.push(fmt17(beta1));
                        row.push(fmt17(beta2));
                    }
                    row.extend([k.to_string(), fmt17(r.p_lower), opt17(r.eps)]);
                    t.push(row);
                }
            }
            Ok(t)
        }
    }
}

/// Grid of Monte Carlo configurations joined with the matching bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub distribution: TrialDistribution,
    pub ns: Vec<usize>,
    pub backgrounds: Vec<usize>,
    pub ks: Vec<usize>,
    pub separators: Vec<SeparatorKind>,
    pub trials: usize,
    pub seed: u64,
    pub grid: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            distribution: TrialDistribution::Ball,
            ns: vec![100],
            backgrounds: vec![500],
            ks: vec![1, 2, 3],
            separators: vec![SeparatorKind::Mean, SeparatorKind::Lp],
            trials: 50,
            seed: 0,
            grid: DEFAULT_GRID_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub background: usize,
    pub k: usize,
    pub separator: SeparatorKind,
    pub mc: McResult,
    pub p_lower: f64,
}

impl ReportRow {
    /// `p_hat >= p_lower - 3 sigma` with the binomial standard error.
    pub fn sound(&self) -> bool {
        self.mc.p_hat >= self.p_lower - 3.0 * self.mc.std_error()
    }
}

/// Bound matching a trial distribution: the ball bound, or for cube
/// samples `1 - theta_min` of the quotient bound.
pub fn matching_bound(distribution: &TrialDistribution, n: usize, background: usize, k: usize, grid: usize) -> Result<f64> {
    match distribution {
        TrialDistribution::Ball => {
            Ok(p1_ball_lower(&BallBoundQuery::new(n, background as u64, k).with_grid(grid))?.p_lower)
        }
        TrialDistribution::Cube(spec) => {
            if k >= n {
                return Ok(0.0);
            }
            Ok(1.0 - quotient_min_theta(n, k, spec.min_std(n), background as u64)?)
        }
    }
}

/// Runs every configuration, seeding trial streams from `seed` and the
/// configuration's position so rows are independent of each other.
pub fn mc_vs_bound_rows(config: &ReportConfig) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &n in &config.ns {
        for &background in &config.backgrounds {
            for &k in &config.ks {
                let p_lower = matching_bound(&config.distribution, n, background, k, config.grid)?;
                for &separator in &config.separators {
                    let trial = TrialConfig {
                        distribution: config.distribution.clone(),
                        n,
                        background,
                        k,
                        trials: config.trials,
                        seed: config.seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                        separator,
                    };
                    rows.push(ReportRow {
                        n,
                        background,
                        k,
                        separator,
                        mc: run_trials(&trial)?,
                        p_lower,
                    });
                }
                index += 1;
            }
        }
    }
    Ok(rows)
}

pub fn report_table(rows: &[ReportRow]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "n", "M", "k", "separator", "p_hat", "ci_low", "ci_high", "p_lower", "verdict", "excluded",
    ]);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            r.background.to_string(),
            r.k.to_string(),
            r.separator.name().to_string(),
            fmt17(r.mc.p_hat),
            fmt17(r.mc.ci_low),
            fmt17(r.mc.ci_high),
            fmt17(r.p_lower),
            if r.sound() { "pass" } else { "fail" }.to_string(),
            r.mc.excluded.to_string(),
        ]);
    }
    t
}

/// `n,M,k,separator,p_hat,ci_low,ci_high,p_lower,verdict,excluded` table.
pub fn mc_vs_bound_report(config: &ReportConfig) -> Result<CsvTable> {
    Ok(report_table(&mc_vs_bound_rows(config)?))
}

/// `n,M,k,p_hat,ci_low,ci_high,bound` table for a single separator.
pub fn mc_compare(config: &ReportConfig) -> Result<CsvTable> {
    let rows = mc_vs_bound_rows(config)?;
    let mut t = CsvTable::new(&["n", "M", "k", "p_hat", "ci_low", "ci_high", "bound"]);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            r.background.to_string(),
            r.k.to_string(),
            fmt17(r.mc.p_hat),
            fmt17(r.mc.ci_low),
            fmt17(r.mc.ci_high),
            fmt17(r.p_lower),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn empty_range_gives_header_only() {
        let c = CurveConfig::Ball {
            n: 100,
            background: 1000,
            grid: 16,
        };
        let t = emit_bound_curve(&c, 3..=2).unwrap();
        assert_eq!(t.render(), "k,p_lower,eps,delta\n");
    }

    #[test]
    fn corr_layouts() {
        let one = CurveConfig::Corr {
            n: 200,
            background: 1000,
            grid: 16,
            settings: vec![(0.5, 0.05)],
        };
        let t = emit_bound_curve(&one, 1..=3).unwrap();
        assert!(t.render().starts_with("k,p_lower,eps\n1,"));
        let many = CurveConfig::Corr {
            n: 200,
            background: 1000,
            grid: 16,
            settings: vec![(0.5, 0.0), (0.5, 0.07)],
        };
        let t = emit_bound_curve(&many, 1..=3).unwrap();
        assert_eq!(t.rows(), 6);
        assert!(t.render().starts_with("beta1,beta2,k,p_lower,eps\n"));
    }

    #[test]
    fn single_trial_rows_are_well_formed() {
        let cfg = ReportConfig {
            ns: vec![20],
            backgrounds: vec![30],
            ks: vec![1],
            trials: 1,
            grid: 16,
            ..ReportConfig::default()
        };
        let rows = mc_vs_bound_rows(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.mc.ci_low <= r.mc.p_hat && r.mc.p_hat <= r.mc.ci_high);
            assert!(r.mc.ci_low >= 0.0 && r.mc.ci_high <= 1.0);
        }
        let csv = report_table(&rows).render();
        assert_eq!(csv.lines().count(), 3);
    }
}
