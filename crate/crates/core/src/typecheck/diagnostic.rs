use std::fmt;

use serde::Serialize;

use super::Pos;

/// Machine-readable class of a diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorClass {
    WrongPeer,
    WrongSort,
    WrongActionKind,
    MissingRecvBranch,
    WrongRecursiveType,
    NonTerminatedSession,
    LinearityReuse,
    UnboundVariable,
    ExprTypeMismatch,
    IllFormedProtocol,
    Unprojectable,
    LocalTypeMismatch,
    InvalidDefinition,
    UnimplementedRole,
}

impl ErrorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::WrongPeer => "wrong-peer",
            ErrorClass::WrongSort => "wrong-sort",
            ErrorClass::WrongActionKind => "wrong-action-kind",
            ErrorClass::MissingRecvBranch => "missing-recv-branch",
            ErrorClass::WrongRecursiveType => "wrong-recursive-type",
            ErrorClass::NonTerminatedSession => "non-terminated-session",
            ErrorClass::LinearityReuse => "linearity-reuse",
            ErrorClass::UnboundVariable => "unbound-variable",
            ErrorClass::ExprTypeMismatch => "expr-type-mismatch",
            ErrorClass::IllFormedProtocol => "ill-formed-protocol",
            ErrorClass::Unprojectable => "unprojectable",
            ErrorClass::LocalTypeMismatch => "local-type-mismatch",
            ErrorClass::InvalidDefinition => "invalid-definition",
            ErrorClass::UnimplementedRole => "unimplemented-role",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub class: ErrorClass,
    pub severity: Severity,
    #[serde(flatten)]
    pub pos: Pos,
    /// Local type fragment the term had to conform to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    /// The offending action.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub found: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn mismatch(class: ErrorClass, pos: Pos, expected: impl Into<String>, found: impl Into<String>) -> Self {
        let (expected, found) = (expected.into(), found.into());
        Diagnostic {
            class,
            severity: Severity::Error,
            pos,
            message: format!("expected {expected}, found {found}"),
            expected: Some(expected),
            found: Some(found),
        }
    }

    pub fn error(class: ErrorClass, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { class, severity: Severity::Error, pos, expected: None, found: None, message: message.into() }
    }

    pub fn warning(class: ErrorClass, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, ..Diagnostic::error(class, pos, message) }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `<file>:<line>:<col>: <class>: <message>`
    pub fn render(&self, file: &str) -> String {
        let sev = if self.is_error() { "" } else { "warning: " };
        format!("{file}:{}:{}: {sev}{}: {}", self.pos.line, self.pos.col, self.class, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.pos, self.class, self.message)
    }
}
