use crate::hypergraph::Region;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("region {0} is not a member of the hypergraph")]
    NotAMember(Region),

    #[error("no member contains {0}; closure undefined")]
    ClosureUndefined(Region),

    #[error("hypergraph is not adapted to the boundary: {region} meets it in {trace}, which is not a member")]
    NotAdapted { region: Region, trace: Region },

    #[error("{0} is not a subset of {1}")]
    NotSubset(Region, Region),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degree error: {0}")]
    Degree(String),

    #[error("operation requires an intersection-closed hypergraph")]
    NotClosed,

    #[error("interaction decomposition unavailable: support {0} has no closure in the cone")]
    DecompositionUnavailable(Region),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("diverged at iteration {iteration}: residual {residual}")]
    Divergence { iteration: usize, residual: f64 },

    #[error("global state space of size {size} exceeds the guard {limit}")]
    SizeGuard { size: u128, limit: u128 },

    #[error("model error at {path}: {message}")]
    Model { path: String, message: String },
}
