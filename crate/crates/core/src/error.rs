use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate plane: offset {offset} is not above {min}")]
    DegeneratePlane { offset: f64, min: f64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no plane found with at least {min_inliers} inliers")]
    NoPlaneFound { min_inliers: usize },
    #[error("insufficient directions: no second direction within {cone_deg} degrees of orthogonal")]
    InsufficientDirections { cone_deg: f64 },
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("non-positive depth {value} at pixel {index}")]
    NonPositiveDepth { index: usize, value: f64 },
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {label} out of range 0..={max}")]
    LabelOutOfRange { label: usize, max: usize },
    #[error("camera is outside the room")]
    CameraOutsideRoom,
    #[error("bad format: {0}")]
    BadFormat(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid user-supplied data; false for
    /// runtime failures (I/O, or inputs on which an algorithm found nothing).
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io(_)
                | Error::NoPlaneFound { .. }
                | Error::InsufficientDirections { .. }
                | Error::EmptyRegion(_)
                | Error::EmptySplit(_)
                | Error::DegenerateGeometry(_)
        )
    }
}
