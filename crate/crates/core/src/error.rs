use thiserror::Error;

/// Errors reported by complex operations, solvers and mesh machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("level {level} out of range for a complex with {levels} levels")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("requested {requested} eigenpairs but only {available} are available")]
    TooManyEigenpairs { requested: usize, available: usize },

    #[error("point at distance {distance} lies outside the tubular neighborhood (reach {reach})")]
    OutsideReach { distance: f64, reach: f64 },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("quadrature degree {0} not supported")]
    Quadrature(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
