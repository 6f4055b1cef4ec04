//! Multi-object asynchronous execution harness: order-preserving
//! channels, environment scripts, pluggable schedulers, deterministic
//! trace recording and replay, and bounded exhaustive exploration of
//! interleavings.

pub mod canon;
mod config;
mod explore;
mod run;
mod scheduler;
mod script;
mod trace;

pub use config::{Configuration, ObjectSlot};
pub use explore::{
    chaos_reached, explore, ExplorationReport, Invariant, StepInfo, TerminalInfo, Violation,
};
pub use run::{replay, run};
pub use scheduler::Scheduler;
pub use script::{Injection, Script};
pub use trace::{content_digest, StopReason, Trace, TraceEvent, TRACE_VERSION};

use thiserror::Error;

use crate::semantics::SemanticsError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("the {0} scheduler cannot drive a single run")]
    InvalidScheduler(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("exploration budget exhausted after {} configurations", partial.reachable)]
    BudgetExceeded { partial: Box<ExplorationReport> },
    #[error("replay diverged at event {event}: {reason}")]
    DivergenceAt { event: usize, reason: String },
    #[error("trace parse error at line {line}: {reason}")]
    TraceParse { line: usize, reason: String },
}
