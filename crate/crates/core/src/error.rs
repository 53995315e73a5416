use std::fmt;

use thiserror::Error;

/// Errors raised by run construction, estimators, samplers and I/O.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("run has no points")]
    EmptyRun,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("likelihood mismatch: {0:?} vs {1:?}")]
    LikelihoodMismatch(String, String),
    #[error("tied log-likelihood {value} at index {index}")]
    TiedLoglike { index: usize, value: f64 },
    #[error("non-finite value at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },
    #[error("point {index} does not exceed its birth contour")]
    BirthNotBelow { index: usize },
    #[error("points not sorted by log-likelihood at index {index}")]
    Unsorted { index: usize },
    #[error("birth contour of point {index} matches no dead point")]
    BirthContourMissing { index: usize },
    #[error("birth contour of point {index} matches more points than available predecessors")]
    BirthChainAmbiguous { index: usize },
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("need at least {needed} threads, run has {found}")]
    TooFewThreads { needed: usize, found: usize },
    #[error("log X coordinates must be negative and strictly decreasing (index {index})")]
    NonMonotonicLogX { index: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("coordinate index {index} out of range for dimension {dim}")]
    CoordinateOutOfRange { index: usize, dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot parse estimator {0:?}")]
    BadEstimator(String),
    #[error("slice sampler failed to shrink onto the constrained region after {0} contractions")]
    SliceBracketFailure(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported run file version {found} (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// A single broken invariant found by [`crate::run::validate_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Dimension,
    NonFiniteLoglike,
    Unsorted,
    Tied,
    BirthNotBelow,
    NliveLength,
    NliveZero,
    NliveMismatch,
    LabelLength,
    BrokenChain,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::Dimension => "dimension mismatch",
            ViolationKind::NonFiniteLoglike => "non-finite loglike",
            ViolationKind::Unsorted => "unsorted",
            ViolationKind::Tied => "tied loglike within a thread",
            ViolationKind::BirthNotBelow => "birth ≥ loglike",
            ViolationKind::NliveLength => "nlive length mismatch",
            ViolationKind::NliveZero => "nlive < 1",
            ViolationKind::NliveMismatch => "nlive disagrees with birth contours",
            ViolationKind::LabelLength => "thread label length mismatch",
            ViolationKind::BrokenChain => "broken thread chain",
        };
        write!(f, "{what} at index {}", self.index)
    }
}
