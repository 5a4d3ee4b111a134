use thiserror::Error;

/// Errors shared across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension is not a power of two: {0}")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("Kraus completeness violated (max deviation {0:.3e})")]
    CompletenessViolation(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    IndexOutOfRange { index: usize, num_qubits: usize },

    #[error("probabilities are invalid: {0}")]
    InvalidDistribution(String),

    #[error("attack acts on the wrong protocol stage: {0}")]
    AttackScope(String),

    #[error("non-invertible working point: |sin(n*theta)| vanishes near prior {0}")]
    NonInvertibleWorkingPoint(f64),

    #[error("key space too large for exact enumeration ({size} keys, cap {cap})")]
    KeySpaceTooLarge { size: u128, cap: u128 },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
