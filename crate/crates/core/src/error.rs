use num_complex::Complex64;
use thiserror::Error;

/// A single rejected field of a [`crate::model::ProblemSpec`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("alpha must be strictly positive and finite, got {0}")]
    NonPositiveAlpha(f64),
    #[error("{field} must be finite and nonnegative, got {value}")]
    NegativeParameter { field: String, value: f64 },
    #[error("beta must lie in [0, 1), got {0}")]
    BetaOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid problem specification: {}", join(.0))]
    Invalid(Vec<ValidationError>),
    #[error("lambda = {lambda} lies inside the excluded neighbourhood of -1/alpha")]
    ExcludedPoint { lambda: Complex64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("characteristic exponents are confluent (separation {separation:e})")]
    ConfluentBasis { separation: f64 },
    #[error("lambda = {lambda} is not an eigenvalue (boundary-matrix residual {residual:e})")]
    NotAnEigenvalue { lambda: Complex64, residual: f64 },
    #[error("a root lies on the contour and {retries} shifted retries failed")]
    RootOnContour { retries: usize },
    #[error("subdivision depth cap reached with winding number {winding}")]
    DepthCapExceeded { winding: i64 },
    #[error("collocation degree {n} is below the minimum of {min}")]
    ResolutionTooLow { n: usize, min: usize },
    #[error("dense eigensolver failure: {0}")]
    SolverFailure(String),
    #[error("polynomial degree {degree} exceeds the working budget {budget}")]
    DegreeOverflow { degree: usize, budget: usize },
    #[error("state is outside the operator domain: |z - Gamma v| = {mismatch:e}")]
    DomainViolation { mismatch: f64 },
    #[error("boundary system for the inverse is singular (determinant {det:e})")]
    SingularSystem { det: f64 },
    #[error("energy weights need generalised ends with k02, k04, k12, k14 > 0")]
    DegenerateWeights,
    #[error("operation needs polynomial data, the state carries exponential terms")]
    NonPolynomialData,
    #[error("need at least {need} matched branches, have {have}")]
    InsufficientData { have: usize, need: usize },
}

fn join(errors: &[ValidationError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
