//! Stochastic separation bounds and one-shot knowledge-transfer correctors.
//!
//! * [`bounds`]: probability lower bounds for separating `k` random points
//!   from `M` others, evaluated in the log domain.
//! * [`sampling`], [`separators`], [`lp`], [`mc`]: samplers, explicit
//!   separating functionals, an exact LP oracle, and Monte Carlo validation.
//! * [`transfer`]: preprocessing, clustering, Fisher units, two-stage
//!   cascades, and reversible correctors for a student classifier.
//! * [`harness`]: synthetic teacher/student scenarios, threshold sweeps and
//!   report files.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod functional;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod mc;
pub mod numeric;
pub mod sampling;
pub mod separators;
pub mod transfer;

pub use bounds::{
    bound_curve, delta_ball, delta_corr, feasible_ball, log_p1_ball, p1_ball_lower, p1_corr_lower,
    quotient_max_m, quotient_min_theta, BallBoundQuery, BoundResult, CorrBoundQuery, CurveSpec,
    FeasiblePoint, QuotientBoundQuery,
};
pub use error::{Error, Result};
pub use functional::LinearFunctional;
pub use lp::{lp_separability, Separability};
pub use mc::{run_trials, McResult, SeparatorKind, TrialConfig, TrialDistribution};
pub use sampling::{sample_ball, sample_cube, SampleSet};
pub use transfer::{
    build_cascade, build_single, Action, CascadeUnit, Corrector, FitConfig, KnowledgeUnit, LabeledStates,
    PreprocessModel,
};
