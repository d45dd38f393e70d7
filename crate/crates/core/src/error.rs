use thiserror::Error;

use crate::continuation::Branch;

/// Errors produced by the library. Every variant names the subsystem it
/// originates from so callers can report a meaningful diagnostic.
#[derive(Error, Debug)]
pub enum Error {
    #[error("spatial: invalid grid: {0}")]
    InvalidGrid(String),

    #[error("spatial: invalid random-field model: {0}")]
    InvalidField(String),

    #[error(
        "spatial: realization component {index} = {value} lies outside the marginal support [{lo}, {hi}]"
    )]
    OutOfSupport {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("eigen: QL iteration did not converge within {max_iter} sweeps at eigenvalue index {index}")]
    EigenNoConvergence { index: usize, max_iter: usize },

    #[error("continuation: bordered system is singular (bifurcation or fold on the path)")]
    SingularBordered,

    #[error("continuation: Newton corrector did not converge (residual {residual:.3e} after {iterations} iterations)")]
    CorrectorFailed { residual: f64, iterations: usize },

    #[error("continuation: step {failed_step} failed after {halvings} step halvings; partial branch has {} samples", .partial.len())]
    StepFailed {
        failed_step: usize,
        halvings: usize,
        partial: Box<Branch>,
    },

    #[error("sparsegrid: multi-index set is not downward closed: {0:?} has no admissible predecessor in the set")]
    NotDownwardClosed(Vec<usize>),

    #[error("sparsegrid: {0}")]
    InvalidSparseGrid(String),

    #[error("gpc: local Vandermonde system is singular for level {level}")]
    SingularVandermonde { level: usize },

    #[error("gpc: point {0:?} lies outside the expansion support")]
    EvalOutOfSupport(Vec<f64>),

    #[error("gpc: {0}")]
    InvalidExpansion(String),

    #[error("uq: operation requires a spatially homogeneous field")]
    RequiresHomogeneous,

    #[error("uq: degenerate sample set (all {0} samples are identical)")]
    DegenerateSamples(usize),

    #[error("uq: {0}")]
    InvalidStudy(String),

    #[error("uq: collocation solve failed at point {point:?}: {source}")]
    CollocationFailed {
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
