use std::fmt;

/// Errors shared by every numerical operator in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum GeomError {
    /// Evaluation point is not in the chart's domain.
    OutsideDomain { coords: Vec<f64> },
    /// A finite-difference stencil point left the chart's domain.
    StencilOutsideDomain { coords: Vec<f64>, axis: usize },
    /// Metric inversion refused: estimated condition number above threshold.
    SingularMetric { cond: f64 },
    /// Metric is not symmetric positive definite at the evaluation point.
    NotPositiveDefinite,
    /// Input has the wrong number of components for this manifold.
    DimensionMismatch { expected: usize, got: usize },
    /// Operation requires a larger dimension (conformal tension theory needs n > 2).
    DimensionTooSmall { n: usize, required: usize },
    /// A non-finite value appeared during evaluation.
    NonFinite { what: &'static str },
    /// Interpolation queried outside the tabulated range.
    OutsideTable { value: f64, lo: f64, hi: f64 },
    /// Arclength integrand hit gamma <= 0.
    NonPositiveGamma { t: f64, value: f64 },
    /// ODE trajectory exceeded the blow-up guard.
    BlowUp { s: f64, y: f64 },
    /// Every sampled point was a critical point of the level function.
    NoRegularPoints,
    /// Structurally invalid input (bad grid, empty table, inconsistent data).
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl fmt::Display for GeomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeomError::OutsideDomain { coords } => {
                write!(f, "point {coords:?} is outside the chart domain")
            }
            GeomError::StencilOutsideDomain { coords, axis } => write!(
                f,
                "finite-difference stencil along axis {axis} leaves the chart domain near {coords:?}"
            ),
            GeomError::SingularMetric { cond } => write!(
                f,
                "metric inversion rejected: condition estimate {cond:.3e} exceeds 1e10"
            ),
            GeomError::NotPositiveDefinite => {
                write!(f, "metric is not symmetric positive definite here")
            }
            GeomError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} components, got {got}")
            }
            GeomError::DimensionTooSmall { n, required } => {
                write!(f, "dimension {n} too small, operation needs n >= {required}")
            }
            GeomError::NonFinite { what } => write!(f, "non-finite value in {what}"),
            GeomError::OutsideTable { value, lo, hi } => {
                write!(f, "value {value} outside tabulated range [{lo}, {hi}]")
            }
            GeomError::NonPositiveGamma { t, value } => {
                write!(f, "gamma({t}) = {value} is not positive")
            }
            GeomError::BlowUp { s, y } => {
                write!(f, "ODE solution blew up: |y({s})| = {y:.3e} exceeds 1e6")
            }
            GeomError::NoRegularPoints => {
                write!(f, "all sampled points are critical points of the level function")
            }
            GeomError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl std::error::Error for GeomError {}
