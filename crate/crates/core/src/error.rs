use thiserror::Error;

/// Defects of an area-weighted map or of a request made on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("unknown edge label {0:?}")]
    UnknownEdge(String),
    #[error("duplicate edge label {0:?}")]
    DuplicateEdge(String),
    #[error("edge {edge:?} occurs {count} times in face boundaries, expected 2")]
    EdgeOccurrence { edge: String, count: usize },
    #[error("edge {0:?} is traversed twice in the same direction; the surface is not orientable")]
    NonOrientable(String),
    #[error("face {0} has an empty boundary word")]
    EmptyFace(usize),
    #[error("face {face} has non-positive or non-finite area {area}")]
    NonPositiveArea { face: usize, area: f64 },
    #[error("the map is not connected")]
    Disconnected,
    #[error("declared {declared} vertices but the face words glue into {computed}")]
    VertexMismatch { declared: usize, computed: usize },
    #[error("Euler characteristic {0} does not give a non-negative integer genus")]
    BadEuler(i64),
    #[error("face index {0} out of range")]
    FaceIndex(usize),
    #[error("the faces do not form a disc: {0}")]
    NotDisc(String),
    #[error("loop uses edge {0:?}, which is not an edge of the disc")]
    LoopLeavesDisc(String),
    #[error("the loop word is not a closed path")]
    LoopNotClosed,
    #[error("malformed map document: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("weight {parts:?} is not dominant for {group}")]
    NotDominant { group: String, parts: Vec<i64> },
    #[error("rank {rank} exceeds the cap {cap} for {what}")]
    RankCap {
        rank: usize,
        cap: usize,
        what: &'static str,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("map error: {0}")]
    Map(#[from] MapError),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by the numbers rather than the request.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
