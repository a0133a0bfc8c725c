//! Positioned diagnostics shared by the checker and the command line.

use std::fmt;

use crate::syntax::{ParseError, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { line: span.line, col: span.col, message: message.into() }
    }

    /// Renders as `file:line:col: message`.
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}", self.line, self.col, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        let mut message = e.message;
        if !e.expected.is_empty() {
            message = format!("{message}; expected {}", e.expected.join(" or "));
        }
        Diagnostic { line: e.line, col: e.col, message }
    }
}
