use std::fmt;

use thiserror::Error;

/// Machine-readable error category, printed by the CLI as `error[CODE]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Parse,
    Infeasible,
    CapExceeded,
    Io,
    Numeric,
    Usage,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Parse => "PARSE",
            ErrorCode::Infeasible => "INFEASIBLE",
            ErrorCode::CapExceeded => "CAP_EXCEEDED",
            ErrorCode::Io => "IO",
            ErrorCode::Numeric => "NUMERIC",
            ErrorCode::Usage => "USAGE",
        }
    }

    /// Process exit status used by the CLI for this category.
    pub fn exit_status(self) -> i32 {
        match self {
            ErrorCode::Usage => 2,
            ErrorCode::Parse => 3,
            ErrorCode::Infeasible => 4,
            ErrorCode::CapExceeded => 5,
            ErrorCode::Io => 6,
            ErrorCode::Numeric => 7,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("road network is disconnected: node `{node}` is unreachable from `{root}`")]
    Disconnected { root: String, node: String },

    #[error("edge `{edge}` is degenerate (length {length} m)")]
    DegenerateEdge { edge: String, length: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("boundary intersection failed on edge `{edge}` for site `{site}`: {msg}")]
    Intersection { edge: String, site: String, msg: String },

    #[error("no node pair is at least {min_length} m apart")]
    NoQualifyingPair { min_length: f64 },

    #[error("target {target} is infeasible: the full candidate set reaches at most {achievable} on the worst path")]
    Infeasible { target: f64, achievable: f64 },

    #[error("path `{path}` is covered by {count} candidate sites, above the enumeration cap of {cap}")]
    CapExceeded { path: String, count: usize, cap: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::Parse { .. } | Error::UnknownId { .. } => ErrorCode::Parse,
            Error::Disconnected { .. } | Error::DegenerateEdge { .. } | Error::Invalid(_) => {
                ErrorCode::Parse
            }
            Error::Intersection { .. } | Error::Numeric(_) => ErrorCode::Numeric,
            Error::NoQualifyingPair { .. } | Error::Infeasible { .. } => ErrorCode::Infeasible,
            Error::CapExceeded { .. } => ErrorCode::CapExceeded,
            Error::Usage(_) => ErrorCode::Usage,
            Error::Io { .. } => ErrorCode::Io,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
