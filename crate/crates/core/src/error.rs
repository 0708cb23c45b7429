use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology parameters: {0}")]
    InvalidSpec(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("degree sequence cannot be realized as a simple connected graph: {0}")]
    Unrealizable(String),
    #[error("topology has no server-hosting switch")]
    NoServers,
    #[error("topology is disconnected")]
    Disconnected,
    #[error("switch {dst} is unreachable from switch {src}")]
    Unreachable { src: usize, dst: usize },
    #[error("infeasible traffic pattern: {0}")]
    Infeasible(String),
    #[error("flow {0} has unbounded size")]
    UnboundedFlow(usize),
    #[error("allocation has no positive rate")]
    ZeroAllocation,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
