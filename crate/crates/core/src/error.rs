use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {element} does not belong to monoid {spec}")]
    SpecMismatch { spec: String, element: String },

    #[error("cannot parse monoid descriptor {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("graph is not a cograph: vertices {0:?} induce a subgraph that is neither a Cartesian nor a free product")]
    NotDecomposable(Vec<usize>),

    #[error("lcm of an empty set is undefined")]
    EmptySet,

    #[error("structural error: {0}")]
    Structure(String),

    #[error("identity element in Z_F family is degenerate")]
    IdentityInFamily,

    #[error("not *-regular at truncation {degree}: Gram minimum eigenvalue {min_eig:e}")]
    NotRegular { degree: usize, min_eig: f64 },

    #[error("kernel inconsistent: generator {generator} least-squares residual {residual:e}")]
    KernelInconsistent { generator: usize, residual: f64 },

    #[error("word of degree {word} applied to vector of degree {support} exceeds truncation {limit}")]
    TruncationOverflow { word: usize, support: usize, limit: usize },

    #[error("parent is not a *-regular dilation of T: frame Gram residual {0:e}")]
    NotRegularParent(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("insufficient wandering slots: need {needed}, budget {budget}")]
    Dimension { needed: usize, budget: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
