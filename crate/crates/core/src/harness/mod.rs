//! Experiment orchestration on synthetic teacher/student pairs: scenario
//! generation, threshold sweeps with and without a corrector, bound curves
//! and Monte Carlo reports.

mod config;
mod experiment;
mod report;
mod scenario;
mod sweep;

pub use config::{
    distribution_from, linspace, report_from, BoundSettings, CorrectorSettings, ExperimentConfig, KeyValues, Policy,
};
pub use experiment::{fit_corrector, run_experiment, run_in_memory, ExperimentOutput};
pub use report::{
    emit_bound_curve, matching_bound, mc_compare, mc_vs_bound_report, mc_vs_bound_rows, report_table, CurveConfig,
    ReportConfig, ReportRow,
};
pub use scenario::{gen_scenario, run_type2_protocol, Geometry, Scenario, ScenarioSpec, Type2States};
pub use sweep::{corrected_decision, roc_sweep, triggers, Attached, Role, SweepPoint, SweepResult};
