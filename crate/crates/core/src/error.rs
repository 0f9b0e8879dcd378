use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while loading or analyzing models.
///
/// Every validation variant names the offending identifier so that
/// diagnostics can point the analyst at the broken part of a model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}:{line}:{column}: malformed XML: {message}")]
    Xml {
        what: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{what}: invalid JSON at line {line}, column {column}: {message}")]
    Json {
        what: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported BPMN document: {0}")]
    Bpmn(String),
    #[error("dangling reference to `{id}` in {context}")]
    DanglingReference { id: String, context: String },
    #[error("duplicate id `{id}` in {context}")]
    DuplicateId { id: String, context: String },
    #[error(
        "contradictory constraints `{first}` and `{second}` over tasks `{task_a}` and `{task_b}`"
    )]
    Contradiction {
        first: String,
        second: String,
        task_a: String,
        task_b: String,
    },
    #[error("element `{element}` is a member of both trust boundaries `{first}` and `{second}`")]
    OverlappingBoundaries {
        element: String,
        first: String,
        second: String,
    },
    #[error("invalid {context} `{id}`: {reason}")]
    Invalid {
        context: &'static str,
        id: String,
        reason: String,
    },
    #[error("unknown pool `{0}`")]
    UnknownPool(String),
    #[error("risk rule `{rule}` references unknown role `{role}`")]
    UnknownRole { rule: String, role: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn json(what: &'static str, err: serde_json::Error) -> Self {
        Error::Json {
            what,
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub(crate) fn dangling(id: impl Into<String>, context: impl Into<String>) -> Self {
        Error::DanglingReference {
            id: id.into(),
            context: context.into(),
        }
    }

    pub(crate) fn duplicate(id: impl Into<String>, context: impl Into<String>) -> Self {
        Error::DuplicateId {
            id: id.into(),
            context: context.into(),
        }
    }

    pub(crate) fn invalid(
        context: &'static str,
        id: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::Invalid {
            context,
            id: id.into(),
            reason: reason.into(),
        }
    }
}
