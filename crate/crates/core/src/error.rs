use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("incidence angle {0} rad is outside [0, pi/2)")]
    IncidenceAngle(f64),

    #[error("bistatic angle {0} rad is outside [0, pi)")]
    BistaticAngle(f64),

    #[error("invalid permittivity: {0}")]
    Permittivity(String),

    #[error("invalid material `{name}`: {reason}")]
    InvalidMaterial { name: String, reason: String },

    #[error("unknown material `{name}` (available: {available})")]
    UnknownMaterial { name: String, available: String },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("endpoints are not strictly on the same side of the reflector plane")]
    OppositeSides,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("RSS field is empty")]
    EmptyField,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("detection coverage needs a LiDAR-guided field, got `{0}`")]
    NotLidarField(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
