use rayon::prelude::*;

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::numeric::fmt17;
use crate::transfer::Corrector;

/// What a trigger does to the student's decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Role {
    /// Type I units: a triggered detection is dropped.
    Suppress,
    /// Type II units: a triggered rejection whose score is within `offset`
    /// below the threshold becomes a detection.
    Promote { offset: f64 },
}

/// A corrector attached to the student for a sweep.
#[derive(Debug, Clone, Copy)]
pub struct Attached<'a> {
    pub corrector: &'a Corrector,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub threshold_index: usize,
    pub tp_base: usize,
    pub fp_base: usize,
    pub tp_corrected: usize,
    pub fp_corrected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub thresholds: Vec<f64>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["threshold", "tp_base", "fp_base", "tp_corrected", "fp_corrected"]);
        for p in &self.points {
            t.push(vec![
                fmt17(self.thresholds[p.threshold_index]),
                p.tp_base.to_string(),
                p.fp_base.to_string(),
                p.tp_corrected.to_string(),
                p.fp_corrected.to_string(),
            ]);
        }
        t
    }
}

/// Per-row triggers of every attached corrector.
pub fn triggers(scenario: &Scenario, correctors: &[Attached<'_>]) -> Result<Vec<Vec<bool>>> {
    correctors
        .iter()
        .map(|a| {
            Ok(a.corrector
                .apply_rows(&scenario.states)?
                .into_iter()
                .map(|app| app.triggered)
                .collect())
        })
        .collect()
}

/// Decision of the augmented student on row `r` at threshold `t`.
pub fn corrected_decision(scenario: &Scenario, correctors: &[Attached<'_>], fired: &[Vec<bool>], r: usize, t: f64) -> bool {
    // Suppression acts on the student's detections and promotion on its
    // rejections, so the two roles never undo each other.
    let score = scenario.scores[r];
    let base = score >= t;
    let mut active = correctors.iter().zip(fired).filter(|(_, f)| f[r]).map(|(a, _)| a.role);
    if base {
        !active.any(|role| role == Role::Suppress)
    } else {
        active.any(|role| matches!(role, Role::Promote { offset } if score >= t - offset))
    }
}

/// TP/FP of the student alone and with the correctors, at each threshold.
pub fn roc_sweep(scenario: &Scenario, correctors: &[Attached<'_>], thresholds: &[f64]) -> Result<SweepResult> {
    if thresholds.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one threshold".into()));
    }
    if thresholds.iter().any(|t| t.is_nan()) || thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("sweep thresholds must be sorted".into()));
    }
    let fired = triggers(scenario, correctors)?;
    let points = thresholds
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut p = SweepPoint {
                threshold_index: i,
                tp_base: 0,
                fp_base: 0,
                tp_corrected: 0,
                fp_corrected: 0,
            };
            for r in 0..scenario.len() {
                let truth = scenario.teacher[r];
                if scenario.scores[r] >= t {
                    if truth {
                        p.tp_base += 1;
                    } else {
                        p.fp_base += 1;
                    }
                }
                if corrected_decision(scenario, correctors, &fired, r, t) {
                    if truth {
                        p.tp_corrected += 1;
                    } else {
                        p.fp_corrected += 1;
                    }
                }
            }
            p
        })
        .collect();
    Ok(SweepResult {
        thresholds: thresholds.to_vec(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::{gen_scenario, ScenarioSpec};
    use crate::transfer::{build_single, FitConfig};

    fn scenario() -> Scenario {
        gen_scenario(&ScenarioSpec {
            n: 20,
            positives: 300,
            negatives: 300,
            ..ScenarioSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn baseline_curve_without_corrector() {
        let s = scenario();
        let r = roc_sweep(&s, &[], &[-1.0, 0.0, 1.0]).unwrap();
        for p in &r.points {
            assert_eq!((p.tp_base, p.fp_base), (p.tp_corrected, p.fp_corrected));
        }
        assert!(r.points[0].tp_base >= r.points[2].tp_base);
        assert_eq!(roc_sweep(&s, &[], &[0.5]).unwrap().points.len(), 1);
        assert!(roc_sweep(&s, &[], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn type1_corrector_cuts_false_positives() {
        let s = scenario();
        let (states, _) = s.type1_states().unwrap();
        let k = states.error_count();
        assert!(k > 0);
        let c = build_single(&states, k.min(8), &FitConfig::default()).unwrap();
        let false_triggers: usize = c.provenance.units.iter().map(|u| u.false_triggers).sum();
        let attached = [Attached {
            corrector: &c,
            role: Role::Suppress,
        }];
        let r = roc_sweep(&s, &attached, &[s.spec.student_threshold]).unwrap();
        let p = r.points[0];
        assert!(p.fp_corrected < p.fp_base);
        assert!(p.tp_base - p.tp_corrected <= false_triggers);
    }
}
