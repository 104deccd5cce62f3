use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("map parameter B must be non-zero")]
    SingularMap,
    #[error("iterate left the finite domain")]
    NonFinite,
    #[error("state is not a fixed point (residual {residual:e})")]
    NotFixedPoint { residual: f64 },
    #[error("no complex multiplier pair: cos(phi) = {cos_phi} lies outside (-1, 1)")]
    NoComplexPair { cos_phi: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("orbit projection is degenerate (covariance eigenvalues {eigenvalues:?})")]
    DegenerateProjection { eigenvalues: [f64; 3] },
    #[error("orbit point {index} coincides with the projection center")]
    UndefinedAngle { index: usize },
    #[error("sequence of length {len} too short for delay {delay}")]
    SequenceTooShort { len: usize, delay: usize },
    #[error("ambiguous unwrap at delta index {index}")]
    AmbiguousUnwrap { index: usize },
    #[error("unwrapped angle increments spread over {spread} turns; the lift is unreliable")]
    UnreliableLift { spread: f64 },
    #[error("tangent cocycle collapsed a vector at index {index}")]
    DegenerateCocycle { index: usize },
    #[error("frame planes are parallel at index {index} (conditioning {conditioning:e})")]
    IntersectionDegenerate { index: usize, conditioning: f64 },
    #[error("no bounded attractor found from any seed")]
    NoAttractor,
    #[error("attractor is a stable fixed point, no invariant circle")]
    NoCircle,
    #[error("attractor is periodic with period {period}")]
    PeriodicAttractor { period: usize, numerator: usize },
    #[error("function values {fa:e} and {fb:e} do not bracket the target")]
    NoBracket { fa: f64, fb: f64 },
    #[error("no bracketing pair found on the search circle")]
    NoCircleBracket,
    #[error("root search did not converge; best point {best} with value {value:e}")]
    NonConvergence { best: f64, value: f64 },
    #[error("candidate misses the target by {residual:e}")]
    ResidualTooLarge { residual: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}
