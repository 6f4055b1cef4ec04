//! Analysis passes over descriptions, machines, and traces: enabledness
//! gaps, transition-discipline audits of recorded traces, and a
//! serializability oracle for interleaved service execution.

mod audit;
mod enabledness;
mod finding;
mod serializability;

pub use audit::{audit_trace, MALFORMED_TRACE, MISSING_RETURN, ORPHAN_RET, POOL_GREW};
pub use enabledness::{enabledness_report, ENABLEDNESS_GAP};
pub use finding::{render_json_lines, render_lines, sort_findings, Finding};
pub use serializability::{serializability_check, NON_SERIALIZABLE};
