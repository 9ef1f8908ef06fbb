use thiserror::Error;

use crate::multivariate::IterationTrace;
use crate::weighted::WeightedStep;

/// Errors produced by the mean computations and their supporting machinery.
#[derive(Debug, Error)]
pub enum MeanError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.6e}, floor {floor:.6e})")]
    NotPositiveDefinite { min_eigenvalue: f64, floor: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("congruence matrix is singular or too ill-conditioned")]
    SingularCongruence,

    #[error("spectral function '{label}' produced non-positive value {output:.6e} at {input:.6e}")]
    NonPositiveResult {
        label: String,
        input: f64,
        output: f64,
    },

    #[error("invalid weights: {0}")]
    WeightError(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("weighted mean did not reach tolerance within depth {depth} (final R-gap {r_gap:.6e})")]
    MaxDepthExceeded {
        depth: u32,
        r_gap: f64,
        trace: Vec<WeightedStep>,
    },

    #[error("iteration did not converge within {iters} steps")]
    MaxItersExceeded {
        iters: u32,
        trace: Box<IterationTrace>,
    },

    #[error("not enough usable steps for a rate fit ({available} above the noise floor, need {needed})")]
    InsufficientSteps { available: usize, needed: usize },

    #[error("expansion coefficient unstable: stencils give {fine:.6e} and {coarse:.6e}")]
    UnstableEstimate { fine: f64, coarse: f64 },

    #[error("parse error: {0}")]
    ParseError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MeanError>;
