//! Lexing, parsing and canonical formatting of specifications.
//!
//! The grammar is documented in `docs/language.md`. Unicode operators
//! (`∧ ∨ ¬ ≠ ≤ ≥ Σ ∫ ∞`) and their ASCII spellings are interchangeable;
//! `import math` is accepted and ignored.

mod ast;
mod format;
mod lexer;
mod parser;

use std::fmt;

pub use ast::*;
pub use format::{format_expr, format_spec};
pub use parser::parse_spec;

/// A syntax error with its position and the set of tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}
