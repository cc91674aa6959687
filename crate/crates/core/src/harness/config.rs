use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::bounds::DEFAULT_GRID_RESOLUTION;
use crate::error::{Error, Result};
use crate::mc::{SeparatorKind, TrialDistribution};
use crate::sampling::{CoordinateLaw, VarianceSpec};
use crate::transfer::{Action, Algorithm, FitConfig};

use super::report::ReportConfig;
use super::scenario::{Geometry, ScenarioSpec};

/// Parsed `key = value` lines. `#` starts a comment; blank lines are
/// ignored; repeated keys are an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected key = value, got {body:?}")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(config_err(line, "empty key"));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line, value.trim().to_string())) {
                return Err(config_err(line, format!("{key} already set on line {first}")));
            }
        }
        Ok(Self {
            entries,
            used: Default::default(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        let hit = self.entries.get(key);
        if hit.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        hit
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| config_err(*line, format!("{key}: cannot parse {v:?}: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => {
                crate::io::parse_bool(v).ok_or_else(|| config_err(*line, format!("{key}: not a boolean: {v:?}")))
            }
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|e| config_err(*line, format!("{key}: cannot parse {s:?}: {e}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Thresholds as a comma list or `lo:hi:count` (evenly spaced, inclusive).
    pub fn get_thresholds(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((line, v)) = self.raw(key).cloned() else {
            return Ok(None);
        };
        if v.contains(':') {
            let parts: Vec<&str> = v.split(':').map(|s| s.trim()).collect();
            let bad = || config_err(line, format!("{key}: expected lo:hi:count, got {v:?}"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].parse().map_err(|_| bad())?;
            let count: usize = parts[2].parse().map_err(|_| bad())?;
            if count == 0 || !(lo <= hi) {
                return Err(bad());
            }
            return Ok(Some(linspace(lo, hi, count)));
        }
        self.get_list(key)
    }

    /// Keys never read by any getter.
    pub fn unused(&self) -> Vec<(usize, String)> {
        let used = self.used.borrow();
        self.entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, (line, _))| (*line, k.clone()))
            .collect()
    }

    /// Fails on the first key no getter asked for.
    pub fn reject_unused(&self) -> Result<()> {
        match self.unused().into_iter().min() {
            Some((line, key)) => Err(config_err(line, format!("unknown key {key}"))),
            None => Ok(()),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.0).unwrap_or(0)
    }
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Type1,
    Type2,
    Both,
}

impl FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "type1" => Ok(Policy::Type1),
            "type2" => Ok(Policy::Type2),
            "both" => Ok(Policy::Both),
            other => Err(Error::InvalidInput(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSettings {
    pub algorithm: Algorithm,
    pub p: usize,
    pub fit: FitConfig,
    pub policy: Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSettings {
    pub n: usize,
    pub background: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scenario: ScenarioSpec,
    /// Threshold drop of the lowered-threshold protocol.
    pub type2_offset: f64,
    pub corrector: CorrectorSettings,
    pub thresholds: Vec<f64>,
    pub bounds: BoundSettings,
    pub report: ReportConfig,
}

/// Trial distribution from `dist` (`ball` | `cube`) and, for cubes, the
/// coordinate variance `sigma2` (uniform law when it equals 1/12).
pub fn distribution_from(kv: &KeyValues, prefix: &str) -> Result<TrialDistribution> {
    let key = format!("{prefix}dist");
    let dist: String = kv.get_or(&key, "ball".to_string())?;
    match dist.as_str() {
        "ball" => Ok(TrialDistribution::Ball),
        "cube" => {
            let var_key = format!("{prefix}sigma2");
            let law = match kv.get::<f64>(&var_key)? {
                None => CoordinateLaw::Uniform,
                Some(v) => CoordinateLaw::with_variance(v).map_err(|e| config_err(kv.line_of(&var_key), e.to_string()))?,
            };
            Ok(TrialDistribution::Cube(VarianceSpec::Iid(law)))
        }
        other => Err(config_err(kv.line_of(&key), format!("unknown distribution {other:?}"))),
    }
}

/// Monte Carlo grid from keys `dist, sigma2, n, M, k, trials, seed,
/// separators, grid` under `prefix`.
pub fn report_from(kv: &KeyValues, prefix: &str, defaults: ReportConfig) -> Result<ReportConfig> {
    let k = |s: &str| format!("{prefix}{s}");
    let separators = match kv.get_list::<String>(&k("separators"))? {
        None => defaults.separators,
        Some(names) => names
            .iter()
            .map(|s| s.parse::<SeparatorKind>().map_err(|e| config_err(kv.line_of(&k("separators")), e.to_string())))
            .collect::<Result<_>>()?,
    };
    let cfg = ReportConfig {
        distribution: if kv.entries.contains_key(&k("dist")) {
            distribution_from(kv, prefix)?
        } else {
            defaults.distribution
        },
        ns: kv.get_list(&k("n"))?.unwrap_or(defaults.ns),
        backgrounds: kv.get_list(&k("M"))?.unwrap_or(defaults.backgrounds),
        ks: kv.get_list(&k("k"))?.unwrap_or(defaults.ks),
        separators,
        trials: kv.get_or(&k("trials"), defaults.trials)?,
        seed: kv.get_or(&k("seed"), defaults.seed)?,
        grid: kv.get_or(&k("grid"), defaults.grid)?,
    };
    if cfg.trials == 0 {
        return Err(config_err(kv.line_of(&k("trials")), "trials must be >= 1"));
    }
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let seed: u64 = kv.get_or("seed", 7)?;
        let base = ScenarioSpec::default();
        let geometry_name: String = kv.get_or("scenario.geometry", "gaussian".to_string())?;
        let separation = kv.get_or("scenario.separation", 3.0)?;
        let spread = kv.get_or("scenario.spread", 1.0)?;
        let geometry = match geometry_name.as_str() {
            "gaussian" => Geometry::Gaussian { separation, spread },
            "ball" => Geometry::Ball { separation, spread },
            other => {
                return Err(config_err(
                    kv.line_of("scenario.geometry"),
                    format!("unknown geometry {other:?}"),
                ))
            }
        };
        let scenario = ScenarioSpec {
            n: kv.get_or("scenario.n", base.n)?,
            geometry,
            positives: kv.get_or("scenario.positives", base.positives)?,
            negatives: kv.get_or("scenario.negatives", base.negatives)?,
            teacher_offset: kv.get_or("scenario.teacher_offset", base.teacher_offset)?,
            label_noise: kv.get_or("scenario.label_noise", base.label_noise)?,
            student_angle: kv.get_or("scenario.student_angle", base.student_angle)?,
            student_threshold: kv.get_or("scenario.student_threshold", base.student_threshold)?,
            seed,
        };
        scenario
            .validate()
            .map_err(|e| config_err(0, format!("scenario: {e}")))?;
        let type2_offset: f64 = kv.get_or("scenario.type2_offset", 0.5)?;
        if !(type2_offset >= 0.0) {
            return Err(config_err(kv.line_of("scenario.type2_offset"), "type2_offset must be >= 0"));
        }

        let parse_with = |key: &str, default: &str| -> Result<String> { kv.get_or(key, default.to_string()) };
        let algorithm: Algorithm = parse_with("corrector.algorithm", "single")?
            .parse()
            .map_err(|e: Error| config_err(kv.line_of("corrector.algorithm"), e.to_string()))?;
        let policy: Policy = parse_with("corrector.policy", "type1")?
            .parse()
            .map_err(|e: Error| config_err(kv.line_of("corrector.policy"), e.to_string()))?;
        let action: Action = parse_with("corrector.action", "swap-label")?
            .parse()
            .map_err(|e: Error| config_err(kv.line_of("corrector.action"), e.to_string()))?;
        let defaults = FitConfig::default();
        let corrector = CorrectorSettings {
            algorithm,
            p: kv.get_or("corrector.p", 3)?,
            fit: FitConfig {
                kappa_max: kv.get_or("corrector.kappa_max", defaults.kappa_max)?,
                eig_floor: kv.get_or("corrector.eig_floor", defaults.eig_floor)?,
                aggressive: kv.get_bool("corrector.aggressive", false)?,
                seed,
                action,
            },
            policy,
        };
        if corrector.p == 0 {
            return Err(config_err(kv.line_of("corrector.p"), "p must be >= 1"));
        }

        let thresholds = kv
            .get_thresholds("sweep.thresholds")?
            .unwrap_or_else(|| linspace(-2.0, 2.0, 41));
        if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(config_err(kv.line_of("sweep.thresholds"), "thresholds must be nonempty and sorted"));
        }

        let bounds = BoundSettings {
            n: kv.get_or("bounds.n", scenario.n)?,
            background: kv.get_or("bounds.M", (scenario.positives + scenario.negatives) as u64)?,
            k_min: kv.get_or("bounds.k_min", 1)?,
            k_max: kv.get_or("bounds.k_max", 10)?,
            grid: kv.get_or("bounds.grid", DEFAULT_GRID_RESOLUTION)?,
        };
        if bounds.n < 2 || bounds.background < 1 || bounds.k_min < 1 || bounds.grid < 2 {
            return Err(config_err(
                0,
                "bounds need n >= 2, M >= 1, k_min >= 1 and grid >= 2",
            ));
        }
        let report = report_from(
            kv,
            "report.",
            ReportConfig {
                ns: vec![scenario.n.max(2)],
                seed,
                ..ReportConfig::default()
            },
        )?;
        kv.reject_unused()?;
        Ok(Self {
            seed,
            scenario,
            type2_offset,
            corrector,
            thresholds,
            bounds,
            report,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::read(path)?)
    }
}
