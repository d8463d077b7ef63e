//! Execution of process terms over an in-process network.
//!
//! A [`GlobalSession`] owns one FIFO queue per ordered pair of roles. Each
//! role obtains its [`Endpoint`] through [`GlobalSession::init`], which
//! returns once every role has arrived. Endpoints are use-once: every action
//! yields a successor, and acting through a consumed handle is a
//! [`RuntimeError::Linearity`] fault.

mod acceptor;
mod driver;
mod endpoint;
mod interp;
mod session;
mod trace;
mod value;

use thiserror::Error;

use crate::ast::{Role, WfError};

pub use acceptor::{replay, Acceptor, Rejected, Step};
pub use driver::{run_file, ProcOutcome, RunOptions, RunReport, SetupError};
pub use endpoint::Endpoint;
pub use interp::{run, Bindings};
pub use session::{GlobalSession, Network};
pub use trace::{EventKind, Trace, TraceEvent, TraceLog};
pub use value::{Message, PayloadRecord, Value};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("ill-formed protocol: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    IllFormed(Vec<WfError>),
    #[error("protocol cannot be projected: {0}")]
    Unprojectable(String),
    #[error("unknown role {role}")]
    UnknownRole { role: Role },
    #[error("role {role} initialised twice")]
    DoubleInit { role: Role },
    #[error("linearity fault: endpoint #{endpoint} of {role} already used, cannot {action}")]
    Linearity { role: Role, endpoint: u64, action: String },
    #[error("sort mismatch at {role}: expected {expected}, found {found}")]
    SortMismatch { role: Role, expected: String, found: String },
    #[error("protocol violation at {role}: expected {expected}, found {found}")]
    Violation { role: Role, expected: String, found: String },
    #[error("session {session} aborted")]
    Aborted { session: String },
    #[error("session `{name}` of {role} ended early at {remaining}")]
    Unfinished { role: Role, name: String, remaining: String },
    #[error("{0}")]
    Eval(String),
}

impl RuntimeError {
    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            RuntimeError::IllFormed(_) => "ill-formed",
            RuntimeError::Unprojectable(_) => "unprojectable",
            RuntimeError::UnknownRole { .. } => "unknown-role",
            RuntimeError::DoubleInit { .. } => "double-init",
            RuntimeError::Linearity { .. } => "linearity-fault",
            RuntimeError::SortMismatch { .. } => "sort-mismatch",
            RuntimeError::Violation { .. } => "protocol-violation",
            RuntimeError::Aborted { .. } => "aborted",
            RuntimeError::Unfinished { .. } => "unfinished",
            RuntimeError::Eval(_) => "eval",
        }
    }
}
