//! Experiment drivers built on the mesh, assembly and solver layers.
//!
//! Everything here works in `f64`.

use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::eigensolve::SolveError;
use crate::geometry::GeometryError;

pub mod appendix;
pub mod convergence;
pub mod ground_state;
pub mod monte_carlo;
pub mod report;
pub mod stats;
pub mod threshold;

pub use appendix::{check_prop_a1, check_prop_a2, mu_table, PropositionCheck};
pub use convergence::{convergence_study, ConvergenceStudy};
pub use ground_state::{
    classify_discrete, count_strip_eigenvalues, default_tau, ground_state, threshold_energy, Classification, GroundState,
};
pub use monte_carlo::{mc_probability, McParams, McSample, McSummary};
pub use report::{ExperimentReport, Record, SCHEMA};
pub use stats::{wilson_interval, Interval};
pub use threshold::{estimate_gamma, verify_destruction_config, DestructionCheck, ThresholdEstimate};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-monotone convergence grid: {0}")]
    NonMonotone(String),
    #[error("threshold predicate fails in the infinite-coupling limit: {0}")]
    PredicateFailsAtInfinity(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl ExperimentError {
    /// Errors caused by the inputs rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            ExperimentError::Geometry(_)
                | ExperimentError::Assembly(_)
                | ExperimentError::InvalidInput(_)
                | ExperimentError::PredicateFailsAtInfinity(_)
        )
    }
}
