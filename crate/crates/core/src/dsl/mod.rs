//! Textual format for high-level games (`.hlpg`).
//!
//! ```text
//! game AS;
//! par n : nat = 2;
//! set N = {1..n};
//! var x, y : N;
//! fun F : N -> pow(N) = x -> N \ {x};
//! place Sys : N kind sys init all;
//! place Env : black kind env init {.};
//! trans fa { in Sys : y; out P : y; }
//! ```
//!
//! The grammar is in `docs/grammar.ebnf`.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use serde::Serialize;

use crate::model::{validate, HighLevelGame, Severity};

pub use printer::print;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseDiagnostic {
    pub(crate) fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// Parses without validating. Identifiers are resolved against the
/// declarations but may remain unknown.
pub fn parse_unchecked(src: &str) -> Result<HighLevelGame, Vec<ParseDiagnostic>> {
    let parsed = parser::parse_source(src);
    if parsed.errors.is_empty() {
        Ok(parsed.game)
    } else {
        Err(parsed.errors)
    }
}

/// Parses and validates. Validation problems are reported at the
/// declaration they concern.
pub fn parse(src: &str) -> Result<HighLevelGame, Vec<ParseDiagnostic>> {
    let parsed = parser::parse_source(src);
    if !parsed.errors.is_empty() {
        return Err(parsed.errors);
    }
    let diags = validate(&parsed.game);
    if diags.iter().all(|d| d.severity != Severity::Error) {
        return Ok(parsed.game);
    }
    Err(diags
        .into_iter()
        .map(|d| {
            let (line, column) = parsed.positions.get(&d.location).copied().unwrap_or((1, 1));
            ParseDiagnostic {
                severity: d.severity,
                line,
                column,
                message: format!("{}: {}", d.location, d.message),
            }
        })
        .collect())
}
