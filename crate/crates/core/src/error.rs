use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid annulus: need 0 < inner < outer, got ({inner}, {outer})")]
    InvalidAnnulus { inner: f64, outer: f64 },

    #[error("viscosity must be positive, got {0}")]
    NonPositiveViscosity(f64),

    #[error("radius {r} lies outside the annulus [{inner}, {outer}]")]
    RadiusOutsideAnnulus { r: f64, inner: f64, outer: f64 },

    #[error("grid needs at least 4 cells per direction, got {n_r} x {n_z}")]
    GridTooCoarse { n_r: usize, n_z: usize },

    #[error("axial period must be positive, got {0}")]
    NonPositivePeriod(f64),

    #[error("azimuthal resolution must be at least 4, got {0}")]
    ThetaTooCoarse(usize),

    #[error("operation requires a theta-resolved grid")]
    RequiresTheta,

    #[error("operation requires an axisymmetric grid")]
    RequiresAxisymmetric,

    #[error("field shape does not match the grid")]
    ShapeMismatch,

    #[error("grids disagree (annulus, resolution or period)")]
    GridMismatch,

    #[error("profile must vanish at both walls (trace {trace:e} exceeds {limit:e})")]
    NonVanishingTrace { trace: f64, limit: f64 },

    #[error("cutoff length must exceed 1, got {0}")]
    CutoffTooSmall(f64),

    #[error("cutoff length {l} exceeds half the axial period {half_period}")]
    CutoffBeyondPeriod { l: f64, half_period: f64 },

    #[error("Newton matrix is singular")]
    SingularJacobian,

    #[error("snapshot is missing file {0}")]
    SnapshotMissing(String),

    #[error("snapshot is malformed: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
