use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported ring: {0}")]
    Ring(String),
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("d^(i+1) d^i != 0 at degree i = {degree}")]
    NotAComplex { degree: i32 },
    #[error("not a chain map: commutation fails at degree {degree}")]
    NotAChainMap { degree: i32 },
    #[error("not a quasi-isomorphism")]
    NotQis,
    #[error("complex is not acyclic (H^{degree} != 0)")]
    NotAcyclic { degree: i32 },
    #[error("invalid short exact sequence: {0}")]
    InvalidSes(String),
    #[error("unsupported ring pair {0}")]
    UnsupportedPair(String),
    #[error("{0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
