use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distance must be odd and at least 3, got {0}")]
    InvalidDistance(usize),
    #[error("bias eta must be at least 0.5")]
    InvalidBias,
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("injection distance d1={d1} exceeds extended distance d2={d2}")]
    DistanceOrder { d1: usize, d2: usize },
    #[error("layouts are inconsistent: {0}")]
    InconsistentLayouts(String),
    #[error("noise is already attached to this circuit")]
    NoiseAlreadyAttached,
    #[error("circuit has no noise attached")]
    NoiseNotAttached,
    #[error("instruction location {0} is out of range")]
    LocationOutOfRange(usize),
    #[error("instruction at location {0} is not a gate, reset or measurement")]
    NotAFaultLocation(usize),
    #[error("detector {0} cannot reach the boundary or its partner")]
    UnreachableDetector(usize),
    #[error("detector {0} is not a node of the matching graph")]
    UnknownDetector(usize),
    #[error("brute force decoding supports at most {max} fired detectors, got {got}")]
    TooManyDetectors { max: usize, got: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
