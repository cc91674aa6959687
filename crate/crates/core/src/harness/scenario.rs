use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::sampling::{ball_points, rng_stream};
use crate::transfer::LabeledStates;

/// Shape of the two classes, centred at `+-separation/2` along `e1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Isotropic Gaussians with standard deviation `spread`.
    Gaussian { separation: f64, spread: f64 },
    /// Uniform balls of radius `spread`.
    Ball { separation: f64, spread: f64 },
}

impl Geometry {
    fn spread(&self) -> f64 {
        match *self {
            Geometry::Gaussian { spread, .. } | Geometry::Ball { spread, .. } => spread,
        }
    }

    fn separation(&self) -> f64 {
        match *self {
            Geometry::Gaussian { separation, .. } | Geometry::Ball { separation, .. } => separation,
        }
    }
}

/// Synthetic teacher/student setup. The teacher labels `x` positive iff
/// `x_0 >= teacher_offset` (then flips each label with probability
/// `label_noise`); the student scores `cos(a) x_0 + sin(a) x_1` and
/// detects iff the score is at least `student_threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub geometry: Geometry,
    pub positives: usize,
    pub negatives: usize,
    pub teacher_offset: f64,
    pub label_noise: f64,
    pub student_angle: f64,
    pub student_threshold: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n: 50,
            geometry: Geometry::Gaussian {
                separation: 3.0,
                spread: 1.0,
            },
            positives: 1000,
            negatives: 1000,
            teacher_offset: 0.0,
            label_noise: 0.0,
            student_angle: 0.35,
            student_threshold: 0.0,
            seed: 7,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput("scenario dimension must be >= 2".into()));
        }
        let spread = self.geometry.spread();
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "class spread must be positive and finite, got {spread}"
            )));
        }
        if !self.geometry.separation().is_finite() {
            return Err(Error::InvalidInput("class separation must be finite".into()));
        }
        if self.positives + self.negatives == 0 {
            return Err(Error::InvalidInput("scenario needs at least one sample".into()));
        }
        if !(0.0..=0.5).contains(&self.label_noise) {
            return Err(Error::InvalidInput("label noise must lie in [0, 0.5]".into()));
        }
        if !self.student_angle.is_finite() || self.student_threshold.is_nan() {
            return Err(Error::InvalidInput("student rule must be finite".into()));
        }
        Ok(())
    }

    /// Unit direction of the student score.
    pub fn student_direction(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.n);
        d[0] = self.student_angle.cos();
        d[1] = self.student_angle.sin();
        d
    }
}

/// A generated sample with both labelings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub states: DMatrix<f64>,
    pub teacher: Vec<bool>,
    pub scores: Vec<f64>,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    /// Student decisions at threshold `t`.
    pub fn student_at(&self, t: f64) -> Vec<bool> {
        self.scores.iter().map(|&s| s >= t).collect()
    }

    pub fn student(&self) -> Vec<bool> {
        self.student_at(self.spec.student_threshold)
    }

    /// All disagreements with the teacher as errors.
    pub fn labeled(&self) -> Result<LabeledStates> {
        let student = self.student();
        let mask = student.iter().zip(&self.teacher).map(|(s, t)| s != t).collect();
        LabeledStates::new(self.states.clone(), mask)
    }

    /// Student detections, with the teacher's rejections among them as
    /// errors. Returns the sample rows used.
    pub fn type1_states(&self) -> Result<(LabeledStates, Vec<usize>)> {
        let student = self.student();
        let rows: Vec<usize> = (0..self.len()).filter(|&r| student[r]).collect();
        let mask = rows.iter().map(|&r| !self.teacher[r]).collect();
        Ok((LabeledStates::new(self.states.select_rows(&rows), mask)?, rows))
    }
}

/// Draws the sample. Row order is all positive-class points, then all
/// negative-class points.
pub fn gen_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let n = spec.n;
    let total = spec.positives + spec.negatives;
    let half = spec.geometry.separation() / 2.0;
    let spread = spec.geometry.spread();
    let mut rng = rng_stream(spec.seed, 0);
    let mut states = match spec.geometry {
        Geometry::Gaussian { .. } => DMatrix::from_fn(total, n, |_, _| spread * rng.sample::<f64, _>(StandardNormal)),
        Geometry::Ball { .. } => ball_points(n, total, &mut rng) * spread,
    };
    for r in 0..total {
        states[(r, 0)] += if r < spec.positives { half } else { -half };
    }
    let mut noise = rng_stream(spec.seed, 1);
    let teacher = (0..total)
        .map(|r| {
            let clean = states[(r, 0)] >= spec.teacher_offset;
            let flip = spec.label_noise > 0.0 && noise.random::<f64>() < spec.label_noise;
            clean != flip
        })
        .collect();
    let d = spec.student_direction();
    let mut row = vec![0.0; n];
    let scores = (0..total)
        .map(|r| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = states[(r, c)];
            }
            dot(d.as_slice(), &row)
        })
        .collect();
    Ok(Scenario {
        spec: spec.clone(),
        states,
        teacher,
        scores,
    })
}

/// States collected by the lowered-threshold protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Type2States {
    /// Proposals (score at least `threshold - offset`), with the teacher's
    /// positives that the student rejects at `threshold` as errors.
    pub states: LabeledStates,
    pub rows: Vec<usize>,
    pub offset: f64,
}

/// Lowers the student threshold by `offset`, keeps every proposal and marks
/// the true detections the student missed at its own threshold.
pub fn run_type2_protocol(scenario: &Scenario, offset: f64) -> Result<Type2States> {
    if !(offset >= 0.0) {
        return Err(Error::InvalidInput("threshold offset must be >= 0".into()));
    }
    let t = scenario.spec.student_threshold;
    let lowered = t - offset;
    let rows: Vec<usize> = (0..scenario.len())
        .filter(|&r| scenario.scores[r] >= lowered)
        .collect();
    let mask = rows
        .iter()
        .map(|&r| scenario.teacher[r] && scenario.scores[r] < t)
        .collect();
    Ok(Type2States {
        states: LabeledStates::new(scenario.states.select_rows(&rows), mask)?,
        rows,
        offset,
    })
}
