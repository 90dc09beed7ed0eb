use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {0} is too small (need N >= {1})")]
    DimensionTooSmall(usize, usize),
    #[error("Hardy strength mu = {mu} outside [0, {mu_bar})")]
    MuOutOfRange { mu: f64, mu_bar: f64 },
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("profile is singular at the origin when mu > 0")]
    SingularPoint,
    #[error("point has wrong dimension: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point with |x| = {0} lies outside the closed unit ball")]
    OutsideBall(f64),
    #[error("coincident points")]
    CoincidentPoints,
    #[error("parameter {name} = {value} out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("negative discriminant {0}")]
    NegativeDiscriminant(f64),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    QuadratureNonconvergence { estimate: f64, error: f64 },
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("no finite function values on the grid")]
    AllNonFinite,
    #[error("bracket [{0}, {1}] does not change sign")]
    SameSignBracket(f64, f64),
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("Newton iteration failed to converge after {iterations} steps (residual {residual})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("matrix is not symmetric (deviation {0})")]
    Asymmetric(f64),
    #[error("configuration is not axisymmetric-reducible: {0}")]
    NonReducible(String),
    #[error("rank-deficient design matrix")]
    RankDeficient,
    #[error("t = {0} lies outside the admissible window")]
    OutsideWindow(f64),
    #[error("variant mismatch: {0}")]
    VariantMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
