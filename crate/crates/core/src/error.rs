use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense cap exceeded: dimension {dim} > cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("eigen-decomposition failed (best residual {best_residual:e})")]
    EigenFailure { best_residual: f64 },

    #[error("input contains no nonzero vector")]
    ZeroInput,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("mask entry {index} is {value}, expected 0 or 1")]
    NonBinaryMask { index: usize, value: f64 },

    #[error("reference {index} has exterior norm {exterior:e} (total {total:e}); it lies inside the masked region")]
    ReferenceInsideMask { index: usize, exterior: f64, total: f64 },

    #[error("group action list is not closed under composition")]
    NotClosed,

    #[error("group action {index} is not unitary: {reason}")]
    NotUnitary { index: usize, reason: String },

    #[error("operator is not self-adjoint (relative defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not real")]
    NotReal,

    #[error("shift {re}{im:+}i is singular for the operator")]
    SingularShift { re: f64, im: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("iterative solve did not reach tolerance (relative residual {residual:e})")]
    IterativeSolve { residual: f64 },

    #[error("eigensolver did not converge after {restarts} restarts ({converged} pairs converged)")]
    NoConvergence { restarts: usize, converged: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mask is disconnected ({components} components)")]
    DisconnectedMask { components: usize },

    #[error("no Zernike index pair passes the filter")]
    EmptyFilter,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
