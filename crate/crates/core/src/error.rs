use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WgError {
    #[error("invalid mesh level {0}: levels start at 1")]
    InvalidLevel(usize),
    #[error("mesh level {0} exceeds the supported maximum of {max}", max = crate::mesh::MAX_LEVEL)]
    LevelTooLarge(usize),
    #[error("edge id {id} out of range (mesh has {count} edges)")]
    InvalidEdge { id: usize, count: usize },
    #[error("element id {id} out of range (mesh has {count} elements)")]
    InvalidElement { id: usize, count: usize },
    #[error("point ({x}, {y}) is off the edge by {distance:e}")]
    PointOffEdge { x: f64, y: f64, distance: f64 },
    #[error("quadrature exactness {0} is not supported (maximum is 40)")]
    UnsupportedExactness(usize),
    #[error("unsupported stabilizer exponent {0}: expected -1, 0, 1 or inf")]
    UnsupportedStabilizer(String),
    #[error("degree out of the supported envelope: {0}")]
    OutOfEnvelope(String),
    #[error("singular local matrix in {0}")]
    SingularLocalMatrix(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, WgError>;
