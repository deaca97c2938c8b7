//! Command-line harness: experiment configuration, exactness suite, studies
//! and table output.

pub mod config;
pub mod exactness;
pub mod study;
pub mod tables;

pub use config::{ExperimentConfig, ReferenceKind, StudyConfig, StudyMode};
pub use exactness::{run_exactness, Check};
pub use study::{build_reference, fit_rate, run_study, run_study_with_reference, Reference, StudyRow, StudySummary};
