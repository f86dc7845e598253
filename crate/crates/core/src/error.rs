//! Error types shared across the crate.

use thiserror::Error;

/// A parameter or config field violated its bound.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid value for `{key}`: {reason}")]
pub struct ValidationError {
    /// Name of the offending field.
    pub key: String,
    /// Human-readable bound description.
    pub reason: String,
}

/// A single simulation step failed.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum StepError {
    /// The clearing price ratio came out non-positive. Only reachable for
    /// extreme negative dividend draws, roughly 1000-sigma events at the
    /// default calibration; treated as a hard error rather than truncated.
    #[error("clearing produced a non-positive price ratio {ratio}")]
    NonPositivePrice { ratio: f64 },
    /// A wealth growth factor came out non-positive.
    #[error("non-positive wealth growth factor {factor} for the {group} group")]
    NonPositiveWealth { factor: f64, group: Group },
}

/// Which investor group a wealth error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Rational,
    Noise,
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Group::Rational => write!(f, "rational"),
            Group::Noise => write!(f, "noise"),
        }
    }
}

/// Errors from the deterministic analysis operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    /// Fixed-point relation s* = kappa/(p - kappa) * H* degenerates.
    #[error("coupling kappa = {kappa} is too close to p = {p} (|p - kappa| < 1e-12)")]
    DegenerateCoupling { kappa: f64, p: f64 },
    /// Reversion-time estimate requires kappa0 > p > mu_kappa.
    #[error("reversion time needs kappa0 > p > mu_kappa, got kappa0 = {kappa0}, p = {p}, mu_kappa = {mu_kappa}")]
    NotSupercritical { kappa0: f64, p: f64, mu_kappa: f64 },
}

/// Errors from the statistical diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    /// Input series shorter than the operation requires.
    #[error("series of length {len} is too short, need at least {min}")]
    TooShort { len: usize, min: usize },
    /// Tail estimation impossible: non-positive threshold or constant tail.
    #[error("degenerate tail: {reason}")]
    DegenerateTail { reason: String },
    /// Autocorrelation of a constant series is undefined.
    #[error("series has zero variance")]
    ZeroVariance,
    /// Log price shows no convexity over the window, the fit is meaningless.
    #[error("second difference of log price is non-positive on {frac:.0}% of the window")]
    NoConvexity { frac: f64 },
}
