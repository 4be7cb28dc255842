//! Experiment runner, stationarity verifier and CSV traces for the
//! restarted accelerated hypergradient solvers.

pub mod csvfmt;
pub mod run;
pub mod spec;
pub mod traces;
pub mod verify;

pub use run::{run_experiment, CliOverrides, ExitStatus, ExperimentOutcome, RunStatus, SeedOutcome};
pub use spec::{BuiltProblem, ExperimentSpec, ProblemSpec, SolverKind, BUILTIN_PROBLEMS};
pub use verify::{sosp_threshold, verify_stationarity, verify_stationarity_with, EigenOptions, StationarityReport};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Malformed spec, unknown value or inconsistent settings.
    #[error("{0}")]
    Spec(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_status(&self) -> ExitStatus {
        ExitStatus::BadInput
    }
}
