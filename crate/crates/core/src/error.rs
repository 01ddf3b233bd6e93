//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid shift: {0}")]
    InvalidShift(String),

    #[error("shifts live on different graphs")]
    GraphMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver failed to converge after {0} iterations")]
    EigenNoConvergence(usize),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("joint diagonalization failed after {attempts} attempts (residual {residual:.3e})")]
    JointDiagonalization { attempts: usize, residual: f64 },

    #[error("polynomial vanishes on the spectral cube (min |h| = {0:.3e})")]
    VanishingOnCube(f64),

    #[error("quadrature unstable: coefficient {index} moved by {rel_change:.3e} when doubling nodes")]
    QuadratureUnstable { index: usize, rel_change: f64 },

    #[error("iteration diverged at step {step} (residual {residual:.3e})")]
    Diverged { step: usize, residual: f64 },

    #[error("non-finite value produced at iteration {0}")]
    NonFinite(usize),

    #[error("positivity certificate failed: min over cube grid of {what} = {min:.6e}")]
    PositivityFailure { what: String, min: f64 },

    #[error("wide-band invariant violated: ||{what}||_2 = {norm:.3e}")]
    WideBandInvariant { what: String, norm: f64 },

    #[error("dense limit exceeded: n = {n} > {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
