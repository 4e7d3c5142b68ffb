// SPDX-License-Identifier: Apache-2.0

//! Source locations and diagnostics shared by every pass.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::Serialize;

/// Stable diagnostic codes.
pub mod codes {
    pub const SYNTAX: &str = "E_SYNTAX";
    pub const UNRESOLVED: &str = "E_UNRESOLVED";
    pub const DUPLICATE: &str = "E_DUPLICATE";
    pub const CYCLE: &str = "E_CYCLE";
    pub const INVALID_TYPE: &str = "E_INVALID_TYPE";
    pub const NOT_STREAM: &str = "E_NOT_STREAM";
    pub const NOT_ELEMENT: &str = "E_NOT_ELEMENT";
    pub const USER_HAS_STREAM: &str = "E_USER_HAS_STREAM";
    pub const NAME_CONFLICT: &str = "E_NAME_CONFLICT";
    pub const UNKNOWN_DOMAIN: &str = "E_UNKNOWN_DOMAIN";
    pub const DOMAIN_UNMAPPED: &str = "E_DOMAIN_UNMAPPED";
    pub const TYPE_MISMATCH: &str = "E_TYPE_MISMATCH";
    pub const DOMAIN_MISMATCH: &str = "E_DOMAIN_MISMATCH";
    pub const DIRECTION: &str = "E_DIRECTION";
    pub const UNCONNECTED: &str = "E_UNCONNECTED";
    pub const MULTIPLE_CONNECTION: &str = "E_MULTIPLE_CONNECTION";
    pub const SELF_LOOP: &str = "E_SELF_LOOP";
    pub const UNKNOWN_PORT: &str = "E_UNKNOWN_PORT";
    pub const IMPL_INTERFACE: &str = "E_IMPL_INTERFACE";
    pub const RECURSIVE_INSTANCE: &str = "E_RECURSIVE_INSTANCE";
    pub const WIDTH_MISMATCH: &str = "E_WIDTH_MISMATCH";
    pub const DEPTH_MISMATCH: &str = "E_DEPTH_MISMATCH";
    pub const IO: &str = "E_IO";
    pub const NO_IMPLEMENTATION: &str = "W_NO_IMPLEMENTATION";
}

/// A byte range in a named source, with the line and column of its start.
///
/// Spans never take part in equality or hashing, so syntax trees compare
/// structurally no matter where they were parsed from.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Span {
    pub file: Arc<str>,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn to(&self, other: &Span) -> Span {
        Span {
            file: self.file.clone(),
            start: self.start,
            end: other.end.max(self.start),
            line: self.line,
            column: self.column,
        }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    /// Declaration path, used when no source span is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span: None,
            path: None,
        }
    }

    pub fn warning(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, message)
        }
    }

    pub fn with_span(mut self, span: &Span) -> Self {
        self.span = Some(span.clone());
        self
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `<file>:<line>:<col>: <severity>[<code>]: <message>`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.span, &self.path) {
            (Some(span), _) => write!(f, "{}:{}:{}: ", span.file, span.line, span.column)?,
            (None, Some(path)) => write!(f, "{path}: ")?,
            (None, None) => {}
        }
        write!(f, "{}[{}]: {}", self.severity, self.code, self.message)
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}
