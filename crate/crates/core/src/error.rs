//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("ticker `{0}` not found in price file")]
    MissingTicker(String),
    #[error("ragged dates: {0}")]
    RaggedDates(String),
    #[error("non-numeric price `{value}` for {ticker} on {date}")]
    BadPrice {
        ticker: String,
        date: String,
        value: String,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("enumeration guard exceeded: {qubits} qubits > {limit}")]
    GuardExceeded { qubits: usize, limit: usize },
    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("qubit indices must be distinct")]
    IndexClash,
    #[error("covariance matrix is singular beyond ridge tolerance")]
    Singular,
    #[error("basis elements {0} and {1} are not Hilbert-Schmidt orthogonal")]
    NonOrthogonalBasis(usize, usize),
    #[error("qubit universe mismatch: {0} vs {1}")]
    UniverseMismatch(usize, usize),
    #[error("estimation budget exhausted after {0} estimates")]
    BudgetExhausted(usize),
    #[error("post-selection kept no outcomes")]
    EmptyPostSelection,
    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
