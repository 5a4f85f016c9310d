use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid symmetry group: {0}")]
    InvalidSymmetry(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("image dimensions {got:?} do not match camera {expected:?}")]
    DimensionMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("object {0} is fully occluded")]
    FullyOccluded(u32),
    #[error("segment too small or degenerate for registration: {0}")]
    DegenerateSegment(String),
    #[error("no candidates found within budget")]
    NoCandidates,
    #[error("dependency graph contains a cycle")]
    Cycle,
    #[error("search node has no children")]
    NoChildren,
    #[error("missing data for object {0}")]
    MissingObject(u32),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
