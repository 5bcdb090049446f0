//! Runtime assurance for LTL safety properties on discrete-time control
//! systems.
//!
//! The pipeline: [`ltl`] parses formulas, [`nba`] and [`monitor`] compile
//! them into minimized three-valued monitors, [`reach`] over-approximates
//! reachable plant-and-monitor states with boxes, [`shield`] runs the
//! assurance mechanism that filters a performance controller, and [`sim`]
//! provides seeded scenarios, drivers and traces.

pub mod ltl;
pub mod monitor;
pub mod nba;
pub mod reach;
pub mod shield;
pub mod sim;

use thiserror::Error;

pub use ltl::{lasso_satisfies, parse_formula, to_nnf, Alphabet, Formula, Letter};
pub use monitor::{build_monitor, classify_safety, minimize_dfa, Monitor, SafetyClass, TruthValue};
pub use nba::{formula_to_nba, live_states, Nba};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("{what} exceeded the limit of {cap}")]
    ResourceLimit { cap: usize, what: &'static str },
    #[error("undeclared atomic proposition `{0}`")]
    UndeclaredAtom(String),
    #[error(transparent)]
    Alphabet(#[from] ltl::AlphabetError),
    #[error("invalid monitor: {0}")]
    InvalidMonitor(String),
    #[error("internal compiler error: {0}")]
    Internal(String),
}
