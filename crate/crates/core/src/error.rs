use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph spec: {0}")]
    Schema(String),
    #[error("negative weight on edge {edge}")]
    NegativeWeight { edge: String },
    #[error("non-planar embedding: edges {a} and {b} cross")]
    NonPlanar { a: String, b: String },
    #[error("graph is disconnected: {0}")]
    Disconnected(String),
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("broken rotation system: {0}")]
    RotationSystem(String),
    #[error("Kasteleyn orientation check failed on face {face}")]
    NotKasteleyn { face: usize },
    #[error("unbalanced colour classes: {black} black vs {white} white")]
    Unbalanced { black: usize, white: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix")]
    Singular,
    #[error("enumeration cap of {0} configurations exceeded")]
    CapExceeded(usize),
    #[error("no sign pattern reproduces the enumerated partition function")]
    Calibration,
    #[error("interpolation failed: {0}")]
    Interpolation(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
