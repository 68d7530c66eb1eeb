use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("p must lie in [0,1] (got {0})")]
    ProbabilityOutOfRange(f64),

    #[error("value must be finite (got {0})")]
    NonFinite(f64),

    #[error("point {0} lies outside [0,1)")]
    PointOutOfDomain(f64),

    #[error("value {0} lies outside [0,1]")]
    ValueOutOfUnitInterval(f64),

    #[error("a measure needs at least one atom")]
    EmptyMeasure,

    #[error("atom weights must be positive (got {0})")]
    NonPositiveWeight(f64),

    #[error("atom weights must sum to 1 within {tol:e} (got {sum})")]
    WeightSumMismatch { sum: f64, tol: f64 },

    #[error("atoms must be strictly increasing")]
    UnsortedAtoms,

    #[error("interval endpoints must satisfy a <= b (got a={a}, b={b})")]
    InvalidInterval { a: f64, b: f64 },

    #[error("power exponent must be a finite value >= 1 (got {0})")]
    InvalidPowerExponent(f64),

    #[error("a CDF grid needs at least two nodes, starting at (0,0) and ending at (1,1)")]
    InvalidCdfGrid,

    #[error("CDF grid values must be nondecreasing (node {index}: {value} after {previous})")]
    NonMonotoneCdfGrid {
        index: usize,
        value: f64,
        previous: f64,
    },

    #[error("orbit step count must be >= 1")]
    ZeroOrbitStep,

    #[error("bound certificates require p != 1/2")]
    IdentityParameterUnsupported,

    #[error("certificate step count must be >= 2 (got {0})")]
    CertificateStepTooSmall(u32),

    #[error(
        "certificate at n={n} is invalid (beta_n={beta} does not clear the threshold {threshold})"
    )]
    InvalidCertificate { n: u32, beta: f64, threshold: f64 },

    #[error("this base measure carries no density; use the CDF-difference route instead")]
    MissingDensity,

    #[error(
        "quadrature did not converge: estimate {value} with error {abs_error:e} after {subdivisions} subdivisions"
    )]
    QuadratureDidNotConverge {
        value: f64,
        abs_error: f64,
        subdivisions: usize,
    },

    #[error("distance target must be the endpoint 0 or 1 (got {0})")]
    InvalidDiracTarget(f64),

    #[error("tolerance must be positive (got {0})")]
    NonPositiveTolerance(f64),

    #[error("ensemble size must be >= 1")]
    EmptyEnsemble,

    #[error("tail-mass metric is only defined for atomic initial measures")]
    MetricUnsupported,

    #[error("grid must have at least 2 points (got {0})")]
    GridTooSmall(u32),

    #[error("cannot parse initial measure '{input}': {reason}")]
    BadInitialMeasure { input: String, reason: String },

    #[error("failed to {action} '{path}': {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
