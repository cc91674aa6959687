use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Policy};
use super::report::{emit_bound_curve, mc_vs_bound_report, CurveConfig};
use super::scenario::{gen_scenario, run_type2_protocol, Scenario};
use super::sweep::{roc_sweep, Attached, Role, SweepResult};
use crate::error::Result;
use crate::transfer::{build_cascade, build_single, Algorithm, Corrector, LabeledStates};

use super::config::CorrectorSettings;

/// What an experiment run produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub scenario: Scenario,
    pub type1: Option<Corrector>,
    pub type2: Option<Corrector>,
    pub sweep: SweepResult,
    pub files: Vec<PathBuf>,
}

/// Fits the configured algorithm with `p` capped at the error count.
pub fn fit_corrector(states: &LabeledStates, settings: &CorrectorSettings) -> Result<Corrector> {
    let p = settings.p.min(states.error_count().max(1));
    match settings.algorithm {
        Algorithm::Single => build_single(states, p, &settings.fit),
        Algorithm::Cascade => build_cascade(states, p, &settings.fit),
    }
}

/// Scenario, correctors and sweep, without touching the file system.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<(Scenario, Option<Corrector>, Option<Corrector>, SweepResult)> {
    let scenario = gen_scenario(&config.scenario)?;
    let policy = config.corrector.policy;
    let type1 = if matches!(policy, Policy::Type1 | Policy::Both) {
        let (states, _) = scenario.type1_states()?;
        Some(fit_corrector(&states, &config.corrector)?)
    } else {
        None
    };
    let type2 = if matches!(policy, Policy::Type2 | Policy::Both) {
        let t2 = run_type2_protocol(&scenario, config.type2_offset)?;
        Some(fit_corrector(&t2.states, &config.corrector)?)
    } else {
        None
    };
    let mut attached = Vec::new();
    if let Some(c) = &type1 {
        attached.push(Attached {
            corrector: c,
            role: Role::Suppress,
        });
    }
    if let Some(c) = &type2 {
        attached.push(Attached {
            corrector: c,
            role: Role::Promote {
                offset: config.type2_offset,
            },
        });
    }
    let sweep = roc_sweep(&scenario, &attached, &config.thresholds)?;
    Ok((scenario, type1, type2, sweep))
}

/// Full run: writes `sweep.csv`, `bounds.csv`, `report.csv` and
/// `corrector.json` (plus `corrector_type2.json` when both policies run)
/// into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    std::fs::create_dir_all(out_dir)?;
    let (scenario, type1, type2, sweep) = run_in_memory(config)?;
    let mut files = Vec::new();
    let mut write = |name: &str, text: String| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, text)?;
        files.push(path);
        Ok(())
    };
    write("sweep.csv", sweep.to_csv().render())?;
    let b = &config.bounds;
    let curve = CurveConfig::Ball {
        n: b.n,
        background: b.background,
        grid: b.grid,
    };
    write("bounds.csv", emit_bound_curve(&curve, b.k_min..=b.k_max)?.render())?;
    write("report.csv", mc_vs_bound_report(&config.report)?.render())?;
    match (&type1, &type2) {
        (Some(c1), Some(c2)) => {
            write("corrector.json", c1.to_json()? + "\n")?;
            write("corrector_type2.json", c2.to_json()? + "\n")?;
        }
        (Some(c), None) | (None, Some(c)) => write("corrector.json", c.to_json()? + "\n")?,
        (None, None) => {}
    }
    Ok(ExperimentOutput {
        scenario,
        type1,
        type2,
        sweep,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "seed = 11\nscenario.n = 12\nscenario.positives = 300\nscenario.negatives = 300\n\
        corrector.policy = both\ncorrector.p = 2\nsweep.thresholds = -1:1:5\n\
        bounds.n = 50\nbounds.M = 1000\nbounds.k_max = 3\nbounds.grid = 32\n\
        report.n = 20\nreport.M = 50\nreport.k = 1\nreport.trials = 4\nreport.grid = 32\n";

    #[test]
    fn outputs_are_byte_identical_across_runs() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg, a.path()).unwrap();
        run_experiment(&cfg, b.path()).unwrap();
        assert_eq!(out.files.len(), 5);
        for f in &out.files {
            let name = f.file_name().unwrap();
            let x = std::fs::read(f).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name:?}");
        }
    }

    #[test]
    fn sweep_changes_are_attributable_to_triggers() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        let (scenario, t1, t2, sweep) = run_in_memory(&cfg).unwrap();
        let (t1, t2) = (t1.unwrap(), t2.unwrap());
        let fired1: Vec<bool> = t1.apply_rows(&scenario.states).unwrap().iter().map(|a| a.triggered).collect();
        let fired2: Vec<bool> = t2.apply_rows(&scenario.states).unwrap().iter().map(|a| a.triggered).collect();
        for p in &sweep.points {
            let t = sweep.thresholds[p.threshold_index];
            let (mut dtp, mut dfp) = (0i64, 0i64);
            for r in 0..scenario.len() {
                let s = scenario.scores[r];
                let base = s >= t;
                let mut d = base;
                if d && fired1[r] {
                    d = false;
                } else if !d && fired2[r] && s >= t - cfg.type2_offset {
                    d = true;
                }
                let delta = d as i64 - base as i64;
                if scenario.teacher[r] {
                    dtp += delta;
                } else {
                    dfp += delta;
                }
            }
            assert_eq!(p.tp_corrected as i64 - p.tp_base as i64, dtp);
            assert_eq!(p.fp_corrected as i64 - p.fp_base as i64, dfp);
        }
    }
}
