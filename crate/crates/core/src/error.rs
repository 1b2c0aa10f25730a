use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmbientError {
    #[error("factor {index}: {reason}")]
    InvalidFactor { index: usize, reason: String },
    #[error("factor {factor}: expected {expected} coordinates, found {found}")]
    DimensionMismatch {
        factor: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} factor blocks, found {found}")]
    BlockCount { expected: usize, found: usize },
    #[error("point clouds differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("non-finite coordinate in factor {factor}")]
    NonFinite { factor: usize },
    #[error("factor {factor}: degenerate point cloud (cross-covariance has rank 0)")]
    Degenerate { factor: usize },
    #[error("factor {factor}: points lie on both sheets of the hyperboloid")]
    MixedSheets { factor: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("dimension bookkeeping: sum of factor dimensions {sum} != base_dim + bundle_rank = {expected}")]
    Bookkeeping { sum: usize, expected: usize },
    #[error("field `{field}`: {detail}")]
    Shape { field: String, detail: String },
    #[error("field `{field}` at node ({iu}, {iv}): {detail}")]
    Invariant {
        field: String,
        iu: usize,
        iv: usize,
        detail: String,
    },
    #[error("operation requires a two-dimensional base (base_dim = {0})")]
    NotSurface(usize),
    #[error(transparent)]
    Ambient(#[from] AmbientError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("rank condition violated for factor {factor} at the base node: eigenbundle has dimension {found}, expected {expected}")]
    Rank {
        factor: usize,
        expected: usize,
        found: usize,
    },
    #[error("base node {0} outside the chart")]
    BaseNode(usize),
    #[error("seed matrix has shape {rows}x{cols}, expected {expected}x{expected}")]
    SeedShape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Alignment(#[from] AmbientError),
}

impl From<DatasetError> for ReconstructError {
    fn from(e: DatasetError) -> Self {
        ReconstructError::Frame(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("second fundamental form is not trace-free: |tr_g B| = {value:e} at node ({iu}, {iv})")]
    NotTraceFree { iu: usize, iv: usize, value: f64 },
    #[error("empty theta list")]
    EmptyThetas,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum S2xS2Error {
    #[error("ambient space is not S2 x S2 with unit spheres")]
    WrongSpec,
    #[error("frame data at node {node} has the wrong shape")]
    Frame { node: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    Unknown(String),
    #[error("fixture `{name}` is not periodic in {direction}")]
    Periodicity { name: String, direction: &'static str },
    #[error("grid needs at least 4 cells per direction, got {0}")]
    Grid(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
