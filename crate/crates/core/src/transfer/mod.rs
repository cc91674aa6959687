//! One-shot knowledge transfer: correctors that flag the student's errors
//! with a handful of linear functionals on whitened state vectors.
//!
//! The fit pipeline is center -> regularize (PCA truncation) -> whiten ->
//! cluster the errors -> one Fisher unit per cluster, optionally followed by
//! a second functional per unit that removes background points the first
//! functional wrongly captured. A fitted [`Corrector`] is immutable; units
//! can be removed again with [`Corrector::unlearn`].

mod cascade;
mod cluster;
mod corrector;
mod fisher;
mod preprocess;
mod states;

pub use cascade::{
    compose_with_projection, detect_false_assignments, project_to_hyperplane, second_stage_unit, SecondStage,
    SECOND_STAGE_GAP,
};
pub use cluster::{cluster, ClusterPartition};
pub use corrector::{
    build_cascade, build_single, Action, Algorithm, Application, CascadeUnit, Corrector, FitConfig,
    Provenance, UnitStats, CORRECTOR_VERSION,
};
pub use fisher::{fisher_unit, FisherFit, KnowledgeUnit};
pub use preprocess::{
    center, fit_preprocess, regularize, whiten, Centered, PreprocessModel, Regularized, Whitened,
};
pub use states::LabeledStates;
