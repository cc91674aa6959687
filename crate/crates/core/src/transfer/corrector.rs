use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cascade::{compose_with_projection, detect_false_assignments, project_to_hyperplane, second_stage_unit, SecondStage};
use super::cluster::cluster;
use super::fisher::{fisher_unit, KnowledgeUnit};
use super::preprocess::{fit_preprocess, PreprocessModel};
use super::states::LabeledStates;
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::io::to_json_string;
use crate::linalg::{covariance, dot, select_rows};

pub const CORRECTOR_VERSION: &str = "ktu-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    /// A trigger flips the student's decision.
    SwapLabel,
    /// A trigger is reported; the decision is left alone.
    ReportError,
}

impl std::str::FromStr for Action {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "swap-label" | "swap" => Ok(Action::SwapLabel),
            "report-error" | "report" => Ok(Action::ReportError),
            other => Err(Error::InvalidInput(format!("unknown action {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Single,
    Cascade,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Algorithm::Single),
            "cascade" => Ok(Algorithm::Cascade),
            other => Err(Error::InvalidInput(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub kappa_max: f64,
    pub eig_floor: f64,
    /// Use every non-error state as the Fisher background class instead of
    /// everything outside the current cluster.
    pub aggressive: bool,
    pub seed: u64,
    pub action: Action,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            kappa_max: 1e6,
            eig_floor: 1e-10,
            aggressive: false,
            seed: 0,
            action: Action::SwapLabel,
        }
    }
}

/// A first-stage unit and, for cascades, its second functional. The second
/// functional acts on whitened features directly (the projection onto the
/// first hyperplane is folded into it).
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeUnit {
    pub first: KnowledgeUnit,
    pub second: Option<LinearFunctional>,
}

impl CascadeUnit {
    pub fn fires(&self, xi: &[f64]) -> bool {
        self.first.fires(xi)
            && self
                .second
                .as_ref()
                .is_none_or(|l2| dot(l2.direction().as_slice(), xi) >= l2.offset())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitStats {
    pub cluster: usize,
    pub cluster_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub flagged: bool,
    pub fisher_residual: f64,
    pub fisher_min_eigenvalue: f64,
    pub pseudo_inverse: bool,
    /// Non-error states on which the first functional fires.
    pub first_stage_false_triggers: usize,
    /// Non-error states on which the whole unit fires.
    pub false_triggers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub p0: usize,
    pub p_final: usize,
    /// How the cardinality cap of the cascade loop is read.
    pub cap_reading: String,
    pub kappa_max: f64,
    pub eig_floor: f64,
    pub aggressive: bool,
    pub states: usize,
    pub errors: usize,
    /// `max |Cov(S_w) - I|` over the fitted states.
    pub whitening_deviation: f64,
    pub units: Vec<UnitStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Application {
    pub triggered: bool,
    pub unit: Option<usize>,
    pub features: DVector<f64>,
}

/// Fitted corrector: preprocessing, units (in fit order) and the action on
/// a trigger. Unit ids are positions in [`Corrector::units`].
#[derive(Debug, Clone, PartialEq)]
pub struct Corrector {
    pub preprocess: PreprocessModel,
    pub units: Vec<CascadeUnit>,
    pub action: Action,
    pub provenance: Provenance,
}

impl Corrector {
    pub fn input_dim(&self) -> usize {
        self.preprocess.input_dim()
    }

    pub fn reduced_dim(&self) -> usize {
        self.preprocess.reduced_dim()
    }

    /// First unit (by position) that fires on whitened features `xi`.
    pub fn first_trigger(&self, xi: &[f64]) -> Option<usize> {
        self.units.iter().position(|u| u.fires(xi))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Application> {
        let features = self.preprocess.transform(x)?;
        let unit = self.first_trigger(features.as_slice());
        Ok(Application {
            triggered: unit.is_some(),
            unit,
            features,
        })
    }

    /// Applies to every row of `rows`.
    pub fn apply_rows(&self, rows: &DMatrix<f64>) -> Result<Vec<Application>> {
        let mut buf = vec![0.0; rows.ncols()];
        (0..rows.nrows())
            .map(|r| {
                for (c, v) in buf.iter_mut().enumerate() {
                    *v = rows[(r, c)];
                }
                self.apply(&buf)
            })
            .collect()
    }

    /// The student's decision after this corrector acts on `x`.
    pub fn corrected_decision(&self, x: &[f64], student: bool) -> Result<bool> {
        let a = self.apply(x)?;
        Ok(match (a.triggered, self.action) {
            (true, Action::SwapLabel) => !student,
            _ => student,
        })
    }

    /// Copy without the units at positions `ids`.
    pub fn unlearn(&self, ids: &[usize]) -> Result<Corrector> {
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.units.len()) {
            return Err(Error::UnknownUnit(bad));
        }
        let mut out = self.clone();
        out.units = self
            .units
            .iter()
            .enumerate()
            .filter(|(i, _)| !ids.contains(i))
            .map(|(_, u)| u.clone())
            .collect();
        Ok(out)
    }

    /// Copy with `unit` inserted at position `index`.
    pub fn insert_unit(&self, index: usize, unit: CascadeUnit) -> Result<Corrector> {
        if index > self.units.len() {
            return Err(Error::UnknownUnit(index));
        }
        if unit.first.w().len() != self.reduced_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.reduced_dim(),
                got: unit.first.w().len(),
            });
        }
        let mut out = self.clone();
        out.units.insert(index, unit);
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(&CorrectorFile::from(self))
    }

    pub fn from_json(text: &str) -> Result<Corrector> {
        let file: CorrectorFile = serde_json::from_str(text)?;
        file.into_corrector()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Corrector> {
        Corrector::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct UnitFile {
    w: Vec<f64>,
    c: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    w2: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    c2: Option<f64>,
    cluster: usize,
}

#[derive(Serialize, Deserialize)]
struct CorrectorFile {
    version: String,
    n: usize,
    m: usize,
    mean: Vec<f64>,
    #[serde(rename = "H")]
    h: Vec<f64>,
    #[serde(rename = "W")]
    w: Vec<f64>,
    units: Vec<UnitFile>,
    action: Action,
    provenance: Provenance,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl From<&Corrector> for CorrectorFile {
    fn from(c: &Corrector) -> Self {
        Self {
            version: CORRECTOR_VERSION.to_string(),
            n: c.input_dim(),
            m: c.reduced_dim(),
            mean: c.preprocess.mean.as_slice().to_vec(),
            h: row_major(&c.preprocess.projection),
            w: row_major(&c.preprocess.whitener),
            units: c
                .units
                .iter()
                .map(|u| UnitFile {
                    w: u.first.w().as_slice().to_vec(),
                    c: u.first.c(),
                    w2: u.second.as_ref().map(|l| l.direction().as_slice().to_vec()),
                    c2: u.second.as_ref().map(|l| l.offset()),
                    cluster: u.first.cluster(),
                })
                .collect(),
            action: c.action,
            provenance: c.provenance.clone(),
        }
    }
}

impl CorrectorFile {
    fn into_corrector(self) -> Result<Corrector> {
        if self.version != CORRECTOR_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported corrector version {:?}",
                self.version
            )));
        }
        let (n, m) = (self.n, self.m);
        let check = |what: &str, got: usize, expected: usize| -> Result<()> {
            if got != expected {
                return Err(Error::InvalidInput(format!("{what} has {got} entries, expected {expected}")));
            }
            Ok(())
        };
        check("mean", self.mean.len(), n)?;
        check("H", self.h.len(), n * m)?;
        check("W", self.w.len(), m * m)?;
        let mut units = Vec::with_capacity(self.units.len());
        for u in self.units {
            check("unit w", u.w.len(), m)?;
            if !(u.w.iter().any(|&v| v != 0.0)) {
                return Err(Error::InvalidInput("unit direction is zero".into()));
            }
            let second = match (u.w2, u.c2) {
                (Some(w2), Some(c2)) => {
                    check("unit w2", w2.len(), m)?;
                    Some(LinearFunctional::from_raw_parts(DVector::from_vec(w2), c2))
                }
                (None, None) => None,
                _ => return Err(Error::InvalidInput("w2 and c2 must appear together".into())),
            };
            units.push(CascadeUnit {
                first: KnowledgeUnit::from_parts(DVector::from_vec(u.w), u.c, u.cluster),
                second,
            });
        }
        Ok(Corrector {
            preprocess: PreprocessModel {
                mean: DVector::from_vec(self.mean),
                projection: DMatrix::from_row_slice(n, m, &self.h),
                whitener: DMatrix::from_row_slice(m, m, &self.w),
            },
            units,
            action: self.action,
            provenance: self.provenance,
        })
    }
}

fn row_vec(m: &DMatrix<f64>, r: usize) -> Vec<f64> {
    m.row(r).iter().copied().collect()
}

/// Whitened data shared by both algorithms.
struct Prepared {
    model: PreprocessModel,
    features: DMatrix<f64>,
    error_rows: Vec<usize>,
    whitening_deviation: f64,
}

fn prepare(data: &LabeledStates, config: &FitConfig) -> Result<Prepared> {
    let model = fit_preprocess(data, config.kappa_max, config.eig_floor)?;
    let features = model.transform_rows(data.states())?;
    let m = model.reduced_dim();
    let whitening_deviation = (covariance(&features) - DMatrix::identity(m, m)).amax();
    let error_rows = (0..data.len()).filter(|&r| data.error_mask()[r]).collect();
    Ok(Prepared {
        model,
        features,
        error_rows,
        whitening_deviation,
    })
}

/// Units, the feature-row indices of each cluster, and per-unit stats.
type FirstStage = (Vec<KnowledgeUnit>, Vec<Vec<usize>>, Vec<UnitStats>);

/// First-stage units for a `p`-cluster partition.
fn first_stage(
    prep: &Prepared,
    mask: &[bool],
    p: usize,
    config: &FitConfig,
) -> Result<FirstStage> {
    let y_w = prep.features.select_rows(&prep.error_rows);
    let part = cluster(&y_w, p, config.seed)?;
    let mut units = Vec::with_capacity(p);
    let mut members = Vec::with_capacity(p);
    let mut stats = Vec::with_capacity(p);
    for c in 0..p {
        let rows: Vec<usize> = part.members(c).into_iter().map(|i| prep.error_rows[i]).collect();
        let in_cluster = |r: usize| rows.binary_search(&r).is_ok();
        let background = if config.aggressive {
            select_rows(&prep.features, |r| !mask[r])
        } else {
            select_rows(&prep.features, |r| !in_cluster(r))
        };
        let cluster_rows = prep.features.select_rows(&rows);
        let fit = fisher_unit(&background, &cluster_rows, c)?;
        for &r in &rows {
            if !fit.unit.fires(&row_vec(&prep.features, r)) {
                return Err(Error::FitFailure(format!(
                    "unit {c} does not fire on its own member {r}"
                )));
            }
        }
        let (beta1, beta2) = part.betas[c];
        stats.push(UnitStats {
            cluster: c,
            cluster_size: rows.len(),
            beta1,
            beta2,
            flagged: part.flagged[c],
            fisher_residual: fit.residual,
            fisher_min_eigenvalue: fit.min_eigenvalue,
            pseudo_inverse: fit.pseudo_inverse,
            first_stage_false_triggers: 0,
            false_triggers: 0,
        });
        units.push(fit.unit);
        members.push(rows);
    }
    let intruders = detect_false_assignments(&units, &prep.features, mask);
    for (s, y_e) in stats.iter_mut().zip(&intruders) {
        s.first_stage_false_triggers = y_e.len();
        s.false_triggers = y_e.len();
    }
    Ok((units, members, stats))
}

fn provenance(
    algorithm: Algorithm,
    data: &LabeledStates,
    config: &FitConfig,
    p0: usize,
    p_final: usize,
    prep: &Prepared,
    units: Vec<UnitStats>,
) -> Provenance {
    Provenance {
        algorithm,
        seed: config.seed,
        p0,
        p_final,
        cap_reading: "reduced-dimension".into(),
        kappa_max: config.kappa_max,
        eig_floor: config.eig_floor,
        aggressive: config.aggressive,
        states: data.len(),
        errors: data.error_count(),
        whitening_deviation: prep.whitening_deviation,
        units,
    }
}

/// Single-functional corrector with `p` units, one per error cluster.
pub fn build_single(data: &LabeledStates, p: usize, config: &FitConfig) -> Result<Corrector> {
    let prep = prepare(data, config)?;
    if prep.error_rows.is_empty() {
        return Ok(Corrector {
            units: Vec::new(),
            action: config.action,
            provenance: provenance(Algorithm::Single, data, config, p, 0, &prep, Vec::new()),
            preprocess: prep.model,
        });
    }
    let (units, _, stats) = first_stage(&prep, data.error_mask(), p, config)?;
    Ok(Corrector {
        units: units
            .into_iter()
            .map(|first| CascadeUnit { first, second: None })
            .collect(),
        action: config.action,
        provenance: provenance(Algorithm::Single, data, config, p, p, &prep, stats),
        preprocess: prep.model,
    })
}

/// Two-functional corrector. Starts from `p0` clusters and adds one while
/// some unit captures more states than the reduced dimension or cannot
/// shed its intruders with a second functional.
pub fn build_cascade(data: &LabeledStates, p0: usize, config: &FitConfig) -> Result<Corrector> {
    if p0 == 0 {
        return Err(Error::InvalidInput("p0 must be >= 1".into()));
    }
    let prep = prepare(data, config)?;
    let mask = data.error_mask();
    let k = prep.error_rows.len();
    if k == 0 {
        return Ok(Corrector {
            units: Vec::new(),
            action: config.action,
            provenance: provenance(Algorithm::Cascade, data, config, p0, 0, &prep, Vec::new()),
            preprocess: prep.model,
        });
    }
    let m = prep.model.reduced_dim();
    let mut history = Vec::new();
    'grow: for p in p0..=k {
        let (units, members, mut stats) = first_stage(&prep, mask, p, config)?;
        let intruders = detect_false_assignments(&units, &prep.features, mask);
        if let Some((i, count)) = intruders
            .iter()
            .zip(&members)
            .map(|(e, w)| e.len() + w.len())
            .enumerate()
            .find(|&(_, c)| c > m)
        {
            history.push(format!("p={p}: unit {i} captures {count} states"));
            continue;
        }
        let mut cascade = Vec::with_capacity(p);
        for (i, first) in units.into_iter().enumerate() {
            if intruders[i].is_empty() {
                cascade.push(CascadeUnit { first, second: None });
                continue;
            }
            let keep = project_to_hyperplane(&first, &prep.features.select_rows(&members[i]));
            let reject = project_to_hyperplane(&first, &prep.features.select_rows(&intruders[i]));
            let l2 = match second_stage_unit(&keep, &reject)? {
                SecondStage::Separable(l) => l,
                SecondStage::NotSeparable { gap } => {
                    history.push(format!("p={p}: unit {i} second stage not separable (gap {gap:e})"));
                    continue 'grow;
                }
            };
            let unit = CascadeUnit {
                second: Some(compose_with_projection(&first, &l2)?),
                first,
            };
            let sound = members[i]
                .iter()
                .all(|&r| unit.fires(&row_vec(&prep.features, r)))
                && intruders[i]
                    .iter()
                    .all(|&r| !unit.fires(&row_vec(&prep.features, r)));
            if !sound {
                history.push(format!("p={p}: unit {i} second stage failed verification"));
                continue 'grow;
            }
            cascade.push(unit);
        }
        for (s, u) in stats.iter_mut().zip(&cascade) {
            s.false_triggers = (0..prep.features.nrows())
                .filter(|&r| !mask[r] && u.fires(&row_vec(&prep.features, r)))
                .count();
        }
        return Ok(Corrector {
            units: cascade,
            action: config.action,
            provenance: provenance(Algorithm::Cascade, data, config, p0, p, &prep, stats),
            preprocess: prep.model,
        });
    }
    Err(Error::FitFailure(format!(
        "cascade fit failed for every p in {p0}..={k} (reduced dimension {m}): {}",
        history.join("; ")
    )))
}
