//! Interpreter, simulator, and bounded explorer for object behavior given
//! as one state transition diagram per service.
//!
//! An object's behavior description declares bounded attributes, an
//! initial-state predicate, and one diagram per service. Diagram states
//! carry predicates over the attributes (and optional exclusion sets);
//! transitions carry an input pattern, a precondition, output templates,
//! and a postcondition. Services need not be atomic: a service that calls
//! out and awaits the answer is suspended on a per-thread invocation
//! stack and resumed by the matching return message, so executions of
//! different services interleave on one object.
//!
//! The crate is layered bottom-up:
//!
//! - [`kernel`] — value types (objects, tags, messages, stacks, object
//!   states) and the machine-level legality audit for single transitions.
//! - [`spec`] — abstract syntax, expression evaluation, pattern matching,
//!   and exhaustive static validation over the declared finite domains.
//! - [`dsl`] — concrete textual syntax (`.iostd` files) with a parser,
//!   canonical printer, and manifest syntax for reproducible runs.
//! - [`semantics`] — derivation of machine behavior from a description:
//!   initial states, single-step successor enumeration with stack and tag
//!   discipline, and export of the explicit reachable machine.
//! - [`sim`] — multi-object simulation over order-preserving channels
//!   with scripted injections, deterministic traces, replay, and bounded
//!   exhaustive exploration of interleavings.
//! - [`check`] — analyses: enabledness gaps, trace audits, and a
//!   serializability check for interleaved service execution.

pub mod check;
pub mod dsl;
pub mod kernel;
pub mod semantics;
pub mod sim;
pub mod spec;

pub use kernel::{
    check_step_legal, InvocationStack, LegalityReport, LegalityViolation, Message, MessageKind,
    ObjectId, ObjectState, ProgramCounter, ServiceInvocation, StepResult, Tag, Value,
    VarAssignment,
};
