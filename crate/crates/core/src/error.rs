use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid element count {count}: {reason}")]
    InvalidElementCount { count: usize, reason: &'static str },

    #[error("{name} = {value} is out of range (expected {expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("offset s = {s} coincides with quadrature node {node}")]
    NodeCoincidence { s: f64, node: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("reference integral changed by {change:e} under one extra refinement level")]
    ReferenceNotConverged { change: f64 },

    #[error("zero-length tangent on element {element}")]
    ZeroTangent { element: usize },

    #[error("|h|^2/4 - lambda = {discriminant} <= 0: oscillatory regime is not supported")]
    OscillatoryRegime { discriminant: f64 },

    #[error("fundamental solution fails the adjoint residual check (residual {residual:e})")]
    FundamentalCheckFailed { residual: f64 },

    #[error("fundamental solution evaluated at r = 0")]
    ZeroDistance,

    #[error("non-finite entry in {matrix} at (source {row}, quadrature point {col})")]
    NonFiniteEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
    },

    #[error("matrix is singular to working precision (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("point ({x}, {y}) is not strictly inside the domain")]
    NotInterior { x: f64, y: f64 },

    #[error("unknown {family} strategy '{name}' (available: {available})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        available: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidElementCount { .. }
                | Error::OutOfRange { .. }
                | Error::LengthMismatch { .. }
                | Error::DimensionMismatch(_)
                | Error::NodeCoincidence { .. }
                | Error::OscillatoryRegime { .. }
                | Error::UnknownStrategy { .. }
                | Error::Config(_)
                | Error::Io(_)
        )
    }
}
