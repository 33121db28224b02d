use alloc::string::String;

/// Errors raised by the core algorithms and domain type constructors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("embedding set is empty")]
    EmptySet,
    #[error("dimension mismatch for `{id}`: expected {expected}, found {found}")]
    DimensionMismatch { id: String, expected: usize, found: usize },
    #[error("zero vector for `{0}`")]
    ZeroVector(String),
    #[error("non-finite component in `{id}` at index {index}")]
    NonFinite { id: String, index: usize },
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate group: {0} vector(s), at least 2 required")]
    DegenerateGroup(usize),
    #[error("cannot zero {n} of {dim} dimensions")]
    MaskTooLarge { n: usize, dim: usize },
    #[error("non-finite gradient at dimension {0}")]
    NonFiniteGradient(usize),
    #[error("non-finite weight at dimension {0}")]
    NonFiniteWeight(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("duplicate inventory entry ({lemma}, {pos})")]
    DuplicateEntry { lemma: String, pos: String },
    #[error("empty sense list for ({lemma}, {pos})")]
    EmptySenseList { lemma: String, pos: String },
    #[error("sense `{sense}` listed twice for ({lemma}, {pos})")]
    DuplicateSense { lemma: String, pos: String, sense: String },
    #[error("self-loop on taxonomy node `{0}`")]
    SelfLoop(String),
    #[error("unknown sense `{0}`")]
    UnknownSense(String),
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("singular scatter matrix")]
    Singular,
    #[error("prediction for unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("duplicate prediction for instance `{0}`")]
    DuplicatePrediction(String),
}

pub type Result<T> = core::result::Result<T, Error>;
