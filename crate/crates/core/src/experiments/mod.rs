//! Experiment harness: parameter chain, distortion experiments and the
//! sign-vector replications.

pub mod blm;
pub mod config;
pub mod distortion;
pub mod kahane;
pub mod plan;

pub use blm::{blm_experiment, BlmConfig, BlmReport};
pub use config::{
    AdversarialConfig, ExperimentConfig, FrameConfig, MeasureConfig, ReferenceConfig, ReferenceKind, Thresholds,
};
pub use distortion::{
    run_distortion_trial, run_experiment, trial_seed, Aggregate, ExperimentReport, ReferenceNorm, TrialRecord,
    REPORT_SCHEMA_VERSION,
};
pub use kahane::{kahane_ratio, AverageMode, KahaneRatio};
pub use plan::{oversampled_rows, parameter_plan, ParameterPlan, PlanConstants};
