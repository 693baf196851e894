//! Error type shared by every module of the crate.

use crate::fit::FitResult;

/// Errors produced by state, gate, tomography and fitting operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The coincidence post-selection probability vanished, so no
    /// normalized output state exists.
    #[error("degenerate post-selection: success probability is zero")]
    DegeneratePostSelection,

    /// The tomographic linear inversion cannot be carried out on the
    /// supplied rates (missing settings, zero totals).
    #[error("degenerate tomographic inversion: {0}")]
    DegenerateInversion(String),

    /// The process-tomography input states do not span the operator space.
    #[error("process inversion is rank deficient: input states do not span the operator space")]
    RankDeficientInputs,

    /// The model fit exceeded its iteration cap. Carries the best point
    /// found so far.
    #[error("fit did not converge within {iterations} iterations (best residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best: Box<FitResult>,
    },

    /// A JSON payload could not be encoded or decoded.
    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
