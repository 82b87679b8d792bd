use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point lies on the camera plane (|s| = {0:e})")]
    PointAtCameraPlane(f64),

    #[error("singular camera model: {0}")]
    SingularModel(String),

    #[error("rays are parallel")]
    ParallelRays,

    #[error("ray is parallel to the plane")]
    ParallelToPlane,

    #[error("pattern point {point_id} has {found} usable observations, need at least 2")]
    InsufficientObservations { point_id: u32, found: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("weighted fusion failed: every covariance is singular")]
    DegenerateFusion,

    #[error("plane fit is rank deficient")]
    RankDeficient,

    #[error("ensemble initialization failed: no walker has a finite log likelihood")]
    InitializationFailure,

    #[error("scenario generation failed: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
