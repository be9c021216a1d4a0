//! Parameterized high-level Petri games.
//!
//! A high-level game declares parameters, typed places holding individual
//! tokens, and transitions with guards and arc expressions. For fixed
//! parameters it can be executed directly ([`semantics`]) or compiled into a
//! safe low-level Petri game ([`instantiate`]); [`correspondence`] checks that
//! the two agree step by step.

pub mod benchmarks;
pub mod correspondence;
pub mod dsl;
pub mod eval;
pub mod export;
pub mod instantiate;
pub mod model;
mod par;
pub mod semantics;

use std::fmt;

pub use eval::{EvalError, Instance, ParamEnv, Token, Valuation};
pub use instantiate::{instantiate, LowLevelGame, LowLevelMarking};
pub use model::{validate, Diagnostic, HighLevelGame};
pub use semantics::{Marking, ReachGraph};

/// Resource bounds shared by elaboration and exploration. Exceeding any of
/// them is an error, never a silent truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_valuations: usize,
    /// Largest base set whose power set may be enumerated.
    pub max_powerset: usize,
    /// Expand exploration frontiers on the rayon pool. Ignored without the
    /// `parallel` feature.
    pub parallel: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1_000_000,
            max_valuations: 1_000_000,
            max_powerset: 16,
            parallel: true,
        }
    }
}

/// Path from the initial marking to a violating step.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Witness {
    /// Fired steps, rendered as `t[x=1,...]`.
    pub path: Vec<String>,
    pub detail: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "at the initial marking: {}", self.detail)
        } else {
            write!(f, "after {}: {}", self.path.join(" "), self.detail)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated { witness: Witness },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("state limit of {limit} markings exceeded")]
    StateLimitExceeded { limit: usize },
    #[error("contact violation {0}")]
    ContactViolation(Box<Witness>),
}

impl Error {
    pub fn is_limit(&self) -> bool {
        match self {
            Error::Eval(e) => e.is_limit(),
            Error::StateLimitExceeded { .. } => true,
            Error::ContactViolation(_) => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
