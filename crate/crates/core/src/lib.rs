//! Restarted accelerated hypergradient descent for nonconvex-strongly-convex
//! bilevel problems, its perturbed variant, and the minimax specialization.

pub mod constants;
pub mod error;
pub mod hypergrad;
pub mod oracle;
pub mod probes;
pub mod problems;
pub mod solvers;
pub mod subroutines;
pub mod vector;

pub use constants::{derive_constants, derive_minimax_constants, DerivedConstants, SmoothnessConstants};
pub use error::{Error, Result};
pub use hypergrad::{exact_hypergradient, inexact_hypergradient, inner_solve, InnerMode};
pub use oracle::{BilevelOracle, BilevelProblem, MinimaxOracle, MinimaxProblem, OracleCounters};
pub use vector::Vector;
pub use solvers::{default_config_fosp, default_config_sosp, pragda, prahgd, rahgd, RunReport, SolverConfig};
