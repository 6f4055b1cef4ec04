//! Kernel value types and the machine-level legality rules for transitions.
//!
//! Everything in this module is independent of any concrete service
//! description: it knows about object identities, thread tags, messages,
//! per-thread invocation stacks, and which stack/pool/attribute effects a
//! single machine transition is allowed to have. All types are immutable
//! values and all operations are pure functions, so they can be shared
//! freely between execution threads.

mod ids;
mod invocation;
mod legality;
mod message;
mod state;
mod value;

pub use ids::{ObjectId, Tag};
pub use invocation::{InvocationStack, ProgramCounter, ServiceInvocation, StackUnderflow};
pub use legality::{check_step_legal, LegalityReport, LegalityViolation};
pub use message::{Message, MessageKind, RET_NAME};
pub use state::{ObjectState, StepResult, TagPoolExhausted};
pub use value::{Value, VarAssignment};
