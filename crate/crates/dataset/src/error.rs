use std::path::PathBuf;

use ringforge_geometry::GeometryError;
use ringforge_render::RenderError;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid {field}: {message}")]
    Config { field: &'static str, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("domain {0} has no images")]
    Empty(&'static str),
    #[error("entry {index} out of range for a manifest of {len}")]
    NoSuchEntry { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

pub(crate) fn config(field: &'static str, message: impl Into<String>) -> DatasetError {
    DatasetError::Config {
        field,
        message: message.into(),
    }
}

pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DatasetError {
    let path = path.into();
    move |source| DatasetError::Io { path, source }
}
