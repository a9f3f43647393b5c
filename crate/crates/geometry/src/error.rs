use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Error)]
pub enum GeometryError {
    /// A `RingSpec` (or another parameter record) violated one of its bounds.
    #[error("invalid {field}: {message}")]
    InvalidParameter { field: &'static str, message: String },

    #[error("closed spline needs at least 4 control points, got {0}")]
    TooFewControlPoints(usize),

    #[error("degenerate spline: {0}")]
    Degenerate(String),

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("ring lies entirely behind the camera")]
    BehindCamera,

    #[error("malformed {format} data: {message}")]
    Parse { format: &'static str, message: String },

    #[error("image error: {0}")]
    Image(#[from] ::image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GeometryError {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        GeometryError::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}
