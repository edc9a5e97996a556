use crate::scalar::{ExtReal, Scalar};
use crate::tree::VertexId;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("region would hold {needed} vertices, above the cap of {cap}")]
    OversizeRegion { needed: usize, cap: usize },

    #[error("query reaches depth {required} but the region stops at depth {available}; re-materialize deeper")]
    DepthExceeded { required: usize, available: usize },

    #[error("vertex {vertex} is not a descendant of {ancestor} within the region")]
    NotDescendant { ancestor: VertexId, vertex: VertexId },

    #[error("backward extension impossible: integral of 1/s is {required}, above theta = {theta}")]
    ExtensionImpossible { required: Box<ExtReal>, theta: Box<Scalar> },

    #[error("consistency condition fails at vertex {vertex}: weighted sum of 1/s-integrals is {value}, above 1")]
    ConsistencyViolation { vertex: VertexId, value: ExtReal },

    #[error("level {level} is below kappa = {kappa} at vertex {vertex}")]
    KappaViolated { vertex: VertexId, level: Scalar, kappa: u32 },

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
