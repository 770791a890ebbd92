use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar or vector input was NaN or infinite.
    NonFinite(&'static str),
    InvalidMesh(&'static str),
    /// Element `index` has zero or negative measure.
    DegenerateElement { index: usize },
    InvalidParams(&'static str),
    LengthMismatch { expected: usize, found: usize },
    /// Lumped mass entry `node` is not strictly positive.
    NonPositiveLumpedMass { node: usize },
    NonPositiveEnergy,
    /// Cholesky pivot `row` was not positive: the matrix is not SPD.
    FactorizationBreakdown { row: usize },
    SolverNotConverged { iterations: usize, residual: f64 },
    /// The chemoattractant operator was factored for a different time step.
    TimeStepMismatch { built_for: f64, requested: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::InvalidMesh(why) => write!(f, "invalid mesh: {why}"),
            Error::DegenerateElement { index } => {
                write!(f, "element {index} has non-positive measure")
            }
            Error::InvalidParams(why) => write!(f, "invalid model parameters: {why}"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "vector length {found} does not match {expected} nodes")
            }
            Error::NonPositiveLumpedMass { node } => {
                write!(f, "lumped mass at node {node} is not positive")
            }
            Error::NonPositiveEnergy => write!(f, "entropy energy E1 is not positive"),
            Error::FactorizationBreakdown { row } => {
                write!(f, "Cholesky breakdown at row {row}: matrix is not positive definite")
            }
            Error::SolverNotConverged { iterations, residual } => write!(
                f,
                "linear solver stopped after {iterations} iterations at relative residual {residual:e}"
            ),
            Error::TimeStepMismatch { built_for, requested } => write!(
                f,
                "operator was built for dt = {built_for}, step requested dt = {requested}"
            ),
        }
    }
}

impl core::error::Error for Error {}
