use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine, the metrics, the slide pipeline and the file
/// formats can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize> },
    #[error("non-finite value produced by layer {layer}")]
    NonFinite { layer: usize },
    #[error("inconsistent shapes at layer {layer}: {reason}")]
    InconsistentShapes { layer: usize, reason: String },
    #[error("trace does not belong to this model: {0}")]
    TraceMismatch(String),
    #[error("class index {index} out of range for {class_count} classes")]
    ClassOutOfRange { index: usize, class_count: usize },
    #[error("model is not CAM-eligible: it must end in a global pool followed by one dense layer")]
    NotCamEligible,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid parameter: {0}")]
    ParamInvalid(String),
    #[error("invalid shape: {0}")]
    ShapeInvalid(String),
    #[error("percent {0} outside (0, 100]")]
    PercentOutOfRange(f64),
    #[error("imputation system is singular: every pixel is removed")]
    SingularSystem,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("annotation mask is empty")]
    EmptyMask,
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimMismatch((usize, usize), (usize, usize)),
    #[error("reference map has no positive mass")]
    DegenerateReference,
    #[error("slide {width}x{height} is smaller than the tile size {tile_size}")]
    SlideTooSmall {
        width: usize,
        height: usize,
        tile_size: usize,
    },
    #[error("polygon {0} has fewer than 3 vertices")]
    DegeneratePolygon(usize),
    #[error("polygon {polygon} vertex ({x}, {y}) lies outside the slide")]
    VertexOutOfBounds { polygon: usize, x: f64, y: f64 },
    #[error("region out of bounds: {0}")]
    OutOfBounds(String),
    #[error("{method} unavailable: {reason}")]
    MethodUnavailable { method: String, reason: String },
    #[error("format error: {0}")]
    FormatError(String),
    #[error("count mismatch in layer {layer} ({kind}): {detail}")]
    CountMismatch { layer: usize, kind: String, detail: String },
    #[error("invalid fixture spec: {0}")]
    SpecInvalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
