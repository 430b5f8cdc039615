use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("grid spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("spacing {spacing} does not divide the extent {extent} of axis {axis}")]
    SpacingMismatch { axis: usize, spacing: f64, extent: f64 },
    #[error("grid too coarse: {interior} interior nodes on axis {axis}, need at least {required}")]
    TooCoarse { axis: usize, interior: usize, required: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("maximum of phi^(p-1) V is not positive ({0})")]
    DegenerateWeight(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("time {t} is at or past the blow-up time {blowup_time}")]
    PastBlowup { t: f64, blowup_time: f64 },
    #[error("non-finite value produced at node {node}")]
    NonFinite { node: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),
    #[error("trajectory did not reach the blow-up threshold (stop reason: {0})")]
    NoBlowup(String),
    #[error("only {found} points in the fit window, need {required}")]
    InsufficientTail { found: usize, required: usize },
    #[error("u_max is not increasing inside the fit window")]
    NonmonotoneTail,
    #[error("fitted line has no positive root after the last recorded time")]
    DegenerateFit,
    #[error("point {0:?} lies outside the domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("rescaled profile has an empty mask")]
    EmptyMask,
    #[error("need at least {required} snapshots, found {found}")]
    InsufficientSnapshots { found: usize, required: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("amplitude too small: {0}")]
    AmplitudeTooSmall(String),
    #[error("need at least {required} rows, found {found}")]
    InsufficientRows { found: usize, required: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
