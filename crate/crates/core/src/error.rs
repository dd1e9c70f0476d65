use thiserror::Error;

/// Errors produced by the simulator and the analysis layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("qubit count {0} outside supported range [{1}, {2}]")]
    QubitCount(usize, usize, usize),

    #[error("basis index {index} out of range for {num_qubits} qubits")]
    BasisIndex { index: u64, num_qubits: usize },

    #[error("qubit index {qubit} out of range [1, {num_qubits}]")]
    QubitIndex { qubit: usize, num_qubits: usize },

    /// The state lost its normalization or acquired weight where the
    /// protocol forbids it. Always a bug or a numerical blow-up.
    #[error("numerical corruption: {0}")]
    NumericalCorruption(String),

    /// An operation was applied outside the domain its protocol step guarantees.
    #[error("protocol ordering violated: {0}")]
    ProtocolOrder(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalCorruption(_) | Error::ProtocolOrder(_) => 2,
            Error::Fit(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
