//! Error type shared by all modules of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian: ||M - M^dag||_F = {residual:.3e}")]
    NonHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is not 1: got {trace:.12e}")]
    TraceNotOne { trace: f64 },

    #[error("state vector is not normalized: norm {norm:.12e}")]
    NotNormalized { norm: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("tensor dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("POVM element eigenvalue out of [0, 1]: {value:.3e}")]
    ElementOutOfRange { value: f64 },

    #[error("POVM set does not sum to identity: residual {residual:.3e}")]
    IncompletePovm { residual: f64 },

    #[error("duplicate outcome index {index} in POVM set")]
    DuplicateOutcomeIndex { index: usize },

    #[error("POVM set has no elements")]
    EmptyPovm,

    #[error("probability has non-real trace: imaginary part {imaginary:.3e}")]
    NonRealProbability { imaginary: f64 },

    #[error("probability {value:.6e} is outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("conditioning on an outcome with probability {probability:.3e} below cutoff")]
    OutcomeProbabilityZero { probability: f64 },

    #[error("operator is not unitary: ||U^dag U - I||_F = {residual:.3e}")]
    NonUnitary { residual: f64 },

    #[error("unitary does not match exp(-i H dt): residual {residual:.3e}")]
    EvolutionMismatch { residual: f64 },

    #[error("observation times must satisfy t_a < t1 < t_b < t2")]
    TimeOrdering,

    #[error("slot {slot} out of range for a space with {count} factors")]
    BadSlot { slot: usize, count: usize },

    #[error("duplicate factor label `{label}` in composite space")]
    DuplicateFactorLabel { label: String },

    #[error("entangler is not unitary: residual {residual:.3e}")]
    InvalidEntangler { residual: f64 },

    #[error("weights must be non-negative and sum to 1: {detail}")]
    InvalidWeights { detail: String },

    #[error("pointer basis columns are not orthonormal: residual {residual:.3e}")]
    NotOrthonormal { residual: f64 },

    #[error("schedule times must be strictly increasing")]
    ScheduleOrdering,

    #[error("outcome index {index} out of range for a set with {count} elements")]
    BadOutcomeIndex { index: usize, count: usize },

    #[error("eigensolver failed to converge after {sweeps} sweeps (off-diagonal {offdiag:.3e})")]
    EigNoConvergence { sweeps: usize, offdiag: f64 },
}
