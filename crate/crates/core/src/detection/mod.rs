//! Single-shot heterodyne synthesis and the discrimination pipeline:
//! matched-filter weights, integrated scores, mixture fits, fidelity and QND
//! statistics, and coherence-curve fits.

use thiserror::Error;

mod coherence;
mod mixture;
mod shots;
mod stats;
mod weights;

pub use coherence::{fit_ramsey, fit_t1, RamseyFit, T1Fit};
pub use mixture::{fit_double_gaussian, ClassFit, DoubleGaussianFit, MIN_FIT_SCORES};
pub use shots::{
    simulate_scores, simulate_shots, split_by_label, ErrorModel, ScoreSet, ScoredShot, ShotConfig,
    ShotRecord,
};
pub use stats::{
    assignment_fidelity, empirical_overlap_error, overlap_error, qnd_metric, quantum_efficiency,
    simulate_consecutive, snr_for_overlap, FidelityReport, QndReport,
};
pub use weights::{integrate_shot, weight_function, weight_function_windowed, WeightFunction};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error(
        "averaged envelopes are identical over the integration window; no weight can separate them"
    )]
    DegenerateWeight,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(
        "{what} did not converge after {iterations} iterations (last objective values: {tail:?})"
    )]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        /// Objective value per iteration.
        trace: Vec<f64>,
        tail: Vec<f64>,
    },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl DetectionError {
    pub(crate) fn non_convergence(what: &'static str, trace: Vec<f64>) -> Self {
        let tail = trace[trace.len().saturating_sub(5)..].to_vec();
        DetectionError::NonConvergence {
            what,
            iterations: trace.len(),
            trace,
            tail,
        }
    }

    /// True for errors caused by the request rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            DetectionError::GridMismatch { .. }
                | DetectionError::TooFewPoints { .. }
                | DetectionError::Invalid(_)
        )
    }
}
