use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("target value {r} is not below the upper limit {ell} of the growth rate")]
    RangeExceeded { r: f64, ell: f64 },

    #[error("no bracket found for target {target} after {expansions} expansions")]
    BracketFailure { target: f64, expansions: usize },

    #[error("rate density is negative at {at} (value {value})")]
    NegativeDensity { at: f64, value: f64 },

    #[error("probe inconclusive: {0}")]
    Inconclusive(String),

    #[error("point {s} lies outside the trusted window [{lo}, {hi}]")]
    DomainExceeded { s: f64, lo: f64, hi: f64 },

    #[error("negative time {0} passed to a semiflow")]
    NegativeTime(f64),

    #[error("semiflow is not non-degenerate: {0}")]
    NotNonDegenerate(String),

    #[error("hitting time from {from} to {to} exceeds the time budget")]
    HittingTimeUnbounded { from: f64, to: f64 },

    #[error("transition U({t}, {s}) requested with t < s")]
    TimeOrderViolation { t: f64, s: f64 },

    #[error("integrator failed near t = {t}: {reason}")]
    IntegratorFailure { t: f64, reason: String },

    #[error("empty grid")]
    EmptyGrid,

    #[error("projection rank changes from {expected} to {found} at t = {at}")]
    RankMismatch { expected: usize, found: usize, at: f64 },

    #[error("restricted map on ker P is numerically singular (smallest singular value {sigma:e}) between {t} and {s}")]
    SingularRestriction { t: f64, s: f64, sigma: f64 },

    #[error("Green function is undefined on the diagonal t = s = {0}")]
    Undefined(f64),

    #[error("quadrature budget exceeded on [{a}, {b}] (error estimate {error:e})")]
    QuadratureBudgetExceeded { a: f64, b: f64, error: f64 },

    #[error("semigroup hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
