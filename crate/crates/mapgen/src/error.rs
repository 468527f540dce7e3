use thiserror::Error;

pub type Result<T> = std::result::Result<T, MapgenError>;

#[derive(Debug, Error)]
pub enum MapgenError {
    #[error("malformed OSM XML: {0}")]
    MalformedXml(String),
    #[error("way {way} references missing node {node}")]
    MissingNodeRef { way: i64, node: i64 },
    #[error("bounding box has zero extent")]
    EmptyBBox,
    #[error("map {width}×{height} is smaller than one {tile}×{tile} tile")]
    MapTooSmall { width: usize, height: usize, tile: usize },
    #[error("no map with a connected free region after {attempts} attempts")]
    Degenerate { attempts: usize },
    #[error("maze dimensions must be odd and at least 5, got {width}×{height}")]
    BadDimensions { width: usize, height: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Core(#[from] mapf_core::CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
