use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("site indices out of order: expected i < j, got i={i}, j={j}")]
    IndexOrder { i: usize, j: usize },
    #[error("sites {i} and {j} coincide")]
    DegenerateSites { i: usize, j: usize },
    #[error("effective weight {0} must exceed 1")]
    DegenerateGamma(f64),
    #[error("partner sites are not on a common ray from the apex")]
    NotOnCommonRay,
    #[error("value {0} outside the admissible range (0, 1)")]
    OutOfRange(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("point lies outside the root cube")]
    OutOfRoot,
    #[error("cube lies outside the root cube")]
    CubeOutsideRoot,
    #[error("overlap region is empty")]
    EmptyOverlap,
    #[error("refinement of core {core} needs cubes finer than level {max_level}; rebuild with more fractional bits")]
    RefinementDepthExceeded { core: usize, max_level: u32 },
    #[error("core has no balls")]
    EmptyBallList,
    #[error("apex and target coincide")]
    CoincidentPoints,
    #[error("refinement oracle exceeded its budget of {0} cubes")]
    BudgetExceeded(usize),
    #[error("weight {0} is not a positive finite number")]
    InvalidWeight(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
