use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("input set is empty or unbounded: {0}")]
    UnboundedInput(String),

    #[error("layer index {layer} out of range for a network with {layers} layers")]
    LayerOutOfRange { layer: usize, layers: usize },

    #[error("slack index {index} out of range ({count} slacks)")]
    SlackOutOfRange { index: usize, count: usize },

    #[error("constraint class {0:?} cannot be ablated from this program")]
    UnknownClass(crate::formulations::ConstraintClass),

    #[error("cone {0:?} is not supported by the solver")]
    UnsupportedCone(crate::formulations::Cone),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("enumeration budget exceeded: {hidden} hidden neurons (limit {limit})")]
    BudgetExceeded { hidden: usize, limit: usize },

    #[error("factorization rank must be positive")]
    ZeroRank,

    #[error("no factor carries a non-negligible corner weight")]
    NegligibleWeights,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
