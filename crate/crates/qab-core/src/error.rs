use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QabError {
    #[error("singular coupling: |1 - g^2 (q - 1/q)^2| = {0:e}")]
    SingularCoupling(f64),
    #[error("q is numerically a root of unity: |q^{n} - 1| = {residual:e}")]
    RootOfUnity { n: u32, residual: f64 },
    #[error("bound-state number must be >= 1, got {0}")]
    InvalidBoundStateNumber(usize),
    #[error("x^- must be nonzero")]
    ZeroSpectralParameter,
    #[error("pole: {0}")]
    Pole(String),
    #[error("inconsistent kinematics: {0}")]
    Inconsistent(String),
    #[error("null space has dimension {dim}, expected {expected}")]
    NullDimension { dim: usize, expected: usize },
    #[error("non-generic point: {0}")]
    NonGeneric(String),
    #[error("undefined parity: {0}")]
    Parity(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed charge word `{0}`")]
    MalformedWord(String),
    #[error("linear algebra backend failed: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, QabError>;
