use thiserror::Error;

pub type Result<T> = std::result::Result<T, VmcError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmcError {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("system too large for {operation}: N = {n_sites} exceeds {limit}")]
    TooLarge {
        operation: &'static str,
        n_sites: usize,
        limit: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The wavefunction vanishes at a configuration where a ratio was required.
    #[error("wavefunction node hit at configuration {0:?}")]
    NodeHit(Vec<i8>),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("all amplitudes are zero")]
    ZeroWavefunction,

    #[error("symmetric positive definite factorization failed even with jitter")]
    Factorization,

    #[error("eigensolver failed to converge")]
    EigenSolver,

    #[error("degenerate batch: every eigenvalue of the Gram matrix is below tolerance")]
    DegenerateSpectrum,

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("bound violated at iteration {iteration}: {detail}")]
    BoundViolation { iteration: usize, detail: String },
}
