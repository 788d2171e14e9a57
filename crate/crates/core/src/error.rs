use thiserror::Error;

/// Errors raised by graph construction, the exact null, metrics and the
/// simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node index {node} out of range for a graph with {d} nodes")]
    NodeOutOfRange { node: usize, d: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge between nodes {0} and {1}")]
    DuplicateEdge(usize, usize),

    #[error("edge set contains a directed cycle")]
    Cycle,

    #[error("graphs have different node sets: {0}")]
    NodeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("equivalence class too large: more than {cap} DAG extensions")]
    ClassTooLarge { cap: usize },

    #[error("CPDAG admits no consistent DAG extension")]
    NoExtension,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no usable pairs: all {dropped} pairs had a missing metric value")]
    NoUsablePairs { dropped: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that stem from numerics or combinatorial limits
    /// rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::ClassTooLarge { .. } | Error::NoExtension
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
