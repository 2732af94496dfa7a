use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("qubit index {index} out of range for {qubit_count} qubits")]
    QubitOutOfRange { index: usize, qubit_count: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a valid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("degenerate posterior: conditioning on a probability-zero outcome")]
    DegeneratePosterior,

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("non-finite loss {value} at iteration {iteration}")]
    NonFiniteLoss { iteration: usize, value: f64 },

    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
