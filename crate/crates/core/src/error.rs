use thiserror::Error;

use crate::fibers::FiberKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fiber kind mismatch: {left:?} vs {right:?}")]
    KindMismatch { left: FiberKind, right: FiberKind },
    #[error("carrier mismatch: {left} vs {right} states")]
    CarrierMismatch { left: usize, right: usize },
    #[error("meet of an empty family; use `top` instead")]
    EmptyFamily,
    #[error("map sends state {state} to {target}, outside a carrier of size {size}")]
    MapOutOfRange {
        state: usize,
        target: usize,
        size: usize,
    },
    #[error("invalid carrier: {0}")]
    InvalidCarrier(String),
    #[error("invalid fiber element: {0}")]
    InvalidElement(String),
    #[error("behavior shape mismatch at {path}: {message}")]
    ShapeMismatch { path: String, message: String },
    #[error("invalid modality `{name}`: {message}")]
    InvalidModality { name: String, message: String },
    #[error("invalid situation: {0}")]
    InvalidSituation(String),
    #[error("ill-formed formula: {0}")]
    IllFormedFormula(String),
    #[error("formula parse error at offset {offset}: {message}")]
    FormulaParse { offset: usize, message: String },
    #[error("{what}: {actual} exceeds the enumeration bound {bound}")]
    SizeBound {
        what: &'static str,
        actual: usize,
        bound: usize,
    },
    #[error("linear program did not terminate within {0} pivots")]
    LpIterationLimit(usize),
    #[error("modality `{0}` has no exact lifting evaluator; use the grid oracle")]
    UnregisteredLeaf(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn shape(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by an enumeration or size bound.
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::SizeBound { .. })
    }
}
