use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point at hyperbolic radius {rho} exceeds the truncation radius {max}")]
    Truncation { rho: f64, max: f64 },
    #[error("invalid point: {0}")]
    InvalidPoint(&'static str),
    #[error("geodesic endpoints coincide within tolerance")]
    DegenerateGeodesic,
    #[error("octagon relator residual {residual:e} exceeds 1e-9")]
    Construction { residual: f64 },
    #[error("word is not freely reduced at position {position}")]
    NotReduced { position: usize },
    #[error("word length {requested} exceeds the supported maximum {max}")]
    Resource { requested: usize, max: usize },
    #[error("map is not hyperbolic (|Re a| = {half_trace})")]
    NotHyperbolic { half_trace: f64 },
    #[error("fundamental-domain reduction did not terminate after {steps} steps")]
    ReductionFailure { steps: usize },
    #[error("field truncation bound {tail:e} exceeds the requested tolerance {tolerance:e}")]
    FieldTruncation { tail: f64, tolerance: f64 },
    #[error("positivity violation: epsilon * |df|_g = {value} >= 1")]
    Positivity { value: f64 },
    #[error("Legendre maximizer is not unique (competing angles {first} and {second})")]
    Convexity { first: f64, second: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("minimization did not converge at N = {n}: change {change:e}, gradient {gradient:e}")]
    Convergence {
        n: usize,
        change: f64,
        gradient: f64,
    },
    #[error(
        "grid coverage: preimage at radius {rho} lies outside the source grid of radius {radius}"
    )]
    GridCoverage { rho: f64, radius: f64 },
    #[error("grids differ")]
    GridMismatch,
    #[error("no candidate strip contains the point")]
    NotFound,
    #[error("point lies in the strips of candidates {first} and {second}")]
    StripOverlap { first: usize, second: usize },
}
