//! Concrete syntax: lexing, parsing, desugaring and pretty-printing.

pub mod ast;
pub mod desugar;
pub mod lexer;
pub mod parser;
pub mod printer;

use std::fmt;

pub use ast::*;
pub use desugar::{desugar, desugar_expr};
pub use parser::{parse_expr, parse_program, parse_type};
pub use printer::{print_expr, print_program, print_type};

/// A syntax error with its position and the tokens that would have been
/// accepted there.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, "; expected {}", self.expected.join(" or "))?;
        }
        Ok(())
    }
}
