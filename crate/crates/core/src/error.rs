use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid material: {0}")]
    Material(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("GeoJSON parse error at line {line}, column {column}: {message}")]
    GeoJson {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid GeoJSON: {0}")]
    InvalidGeoJson(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("population-mean threshold needs at least one covered site")]
    EmptyPopulation,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
