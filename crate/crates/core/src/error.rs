use thiserror::Error;

/// Errors raised by validation, likelihood evaluation and inference.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need at least 2 data points, got {0}")]
    TooFewPoints(usize),
    #[error("negative uncertainty {value} in {field} at index {index}")]
    NegativeUncertainty {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("exactly one of per-point errors or a full covariance must be supplied")]
    AmbiguousErrors,
    #[error("covariance not symmetric: entries ({i},{j}) differ by {asymmetry:e}")]
    NotSymmetric { i: usize, j: usize, asymmetry: f64 },
    #[error("covariance not positive semi-definite: smallest eigenvalue {eigenvalue:e}")]
    NotPositiveSemiDefinite { eigenvalue: f64 },
    #[error("not a cubic: leading coefficient is zero")]
    NotCubic,
    #[error("degenerate abscissa: var(x) = 0")]
    DegenerateAbscissa,
    #[error("observed x-variance {var_x} not exceeding x-error variance {sigma_x2}")]
    VarianceNotExceedingError { var_x: f64, sigma_x2: f64 },
    #[error("non-positive variance {value:e} at point {index}")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("matrix {name} is not positive definite (diagonal ratio {conditioning:e})")]
    Singular { name: &'static str, conditioning: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("log-likelihood is not finite at the initial point")]
    NonFiniteInit,
    #[error("model couples data points; use the general-covariance likelihood")]
    CoupledModel,
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
