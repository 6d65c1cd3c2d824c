use thiserror::Error;

use crate::lattice::{EdgeId, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("ice rule violated at vertex {vertex}")]
    IceRule { vertex: VertexId },

    #[error("height multivalued: {0}")]
    Multivalued(String),

    #[error("height step {diff} across edge {edge} (must be +1 or -1)")]
    NonLipschitz { edge: EdgeId, diff: i64 },

    #[error("inadmissible boundary condition: {0}")]
    Inadmissible(String),

    #[error("too large for enumeration: {0}")]
    TooLarge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible sector: {0}")]
    InfeasibleSector(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
