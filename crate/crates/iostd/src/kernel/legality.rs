//! Audit of a single machine transition against the stack, pool, and
//! attribute restrictions of the communication model.
//!
//! The checker is exhaustive and independent of any service description:
//! given the source state, the input message, and a claimed outcome it
//! reports every restriction the outcome breaks. Violations are data, not
//! errors, so callers can collect and render them.

use std::collections::BTreeSet;
use std::fmt;

use super::{Message, MessageKind, ObjectState, StepResult, Tag};

/// One broken machine restriction, with enough context to re-check it by
/// hand from a trace.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LegalityViolation {
    /// A stack other than the input tag's changed.
    ForeignStackChanged { tag: Tag },
    /// The stack effect does not match the row selected by the input kind
    /// and the kind of the last output.
    StackRowMismatch {
        input: MessageKind,
        last: Option<MessageKind>,
        detail: String,
    },
    /// An output before the last one is not a concurrent call.
    MisplacedOutput { index: usize, kind: MessageKind },
    /// A concurrent output does not carry a tag freshly drawn from the
    /// pool, or the pool did not shrink by exactly the allocated tags.
    StaleConcurrentTag { detail: String },
    /// The final sequential or return output rides a different thread
    /// than the processed message.
    OutputTagMismatch { expected: Tag, found: Tag },
    /// A concurrently invoked execution ended with a return message.
    ReturnFromConcurrentInvocation,
    /// The attribute name set changed, or `self` changed.
    AttributeFrameChanged { detail: String },
    /// Argument entries of the surviving top invocation changed.
    ArgumentsMutated { detail: String },
}

impl LegalityViolation {
    /// Stable short code, used in findings and reports.
    pub fn code(&self) -> &'static str {
        match self {
            LegalityViolation::ForeignStackChanged { .. } => "foreign-stack",
            LegalityViolation::StackRowMismatch { .. } => "stack-row",
            LegalityViolation::MisplacedOutput { .. } => "misplaced-output",
            LegalityViolation::StaleConcurrentTag { .. } => "stale-tag",
            LegalityViolation::OutputTagMismatch { .. } => "output-tag",
            LegalityViolation::ReturnFromConcurrentInvocation => "ret-from-conc",
            LegalityViolation::AttributeFrameChanged { .. } => "attribute-frame",
            LegalityViolation::ArgumentsMutated { .. } => "arguments-mutated",
        }
    }
}

impl fmt::Display for LegalityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LegalityViolation::ForeignStackChanged { tag } => {
                write!(
                    f,
                    "stack of tag {} changed but the input rides another thread",
                    tag
                )
            }
            LegalityViolation::StackRowMismatch {
                input,
                last,
                detail,
            } => {
                let last = last.map(|k| k.to_string()).unwrap_or_else(|| "none".into());
                write!(
                    f,
                    "stack effect for input {} / last output {}: {}",
                    input, last, detail
                )
            }
            LegalityViolation::MisplacedOutput { index, kind } => {
                write!(
                    f,
                    "output {} has kind {} but only the last output may be non-concurrent",
                    index, kind
                )
            }
            LegalityViolation::StaleConcurrentTag { detail } => f.write_str(detail),
            LegalityViolation::OutputTagMismatch { expected, found } => {
                write!(
                    f,
                    "final output tag {} differs from input tag {}",
                    found, expected
                )
            }
            LegalityViolation::ReturnFromConcurrentInvocation => {
                f.write_str("concurrently invoked execution emitted a final return message")
            }
            LegalityViolation::AttributeFrameChanged { detail } => f.write_str(detail),
            LegalityViolation::ArgumentsMutated { detail } => f.write_str(detail),
        }
    }
}

/// Outcome of auditing one transition.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LegalityReport {
    pub violations: Vec<LegalityViolation>,
}

impl LegalityReport {
    pub fn is_legal(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code() == code)
    }
}

/// Check a claimed transition outcome against every machine restriction.
///
/// The caller guarantees that `input.rec` is the id of the object whose
/// state is given; the checker has no identity of its own.
pub fn check_step_legal(
    source: &ObjectState,
    input: &Message,
    result: &StepResult,
) -> LegalityReport {
    let mut violations = Vec::new();
    let succ = &result.successor;
    let tt = &input.tag;
    let out = &result.out;
    let last_kind = result.last_kind();

    // Only the last output may be a sequential call or a return.
    if out.len() > 1 {
        for (index, msg) in out[..out.len() - 1].iter().enumerate() {
            if msg.kind != MessageKind::ConcCall {
                violations.push(LegalityViolation::MisplacedOutput {
                    index,
                    kind: msg.kind,
                });
            }
        }
    }

    // Every concurrent output consumes a fresh tag from the pool, and the
    // pool shrinks by exactly those tags.
    let conc_tags: Vec<&Tag> = out
        .iter()
        .filter(|m| m.kind == MessageKind::ConcCall)
        .map(|m| &m.tag)
        .collect();
    let mut fresh: BTreeSet<&Tag> = BTreeSet::new();
    for tag in &conc_tags {
        if !fresh.insert(tag) {
            violations.push(LegalityViolation::StaleConcurrentTag {
                detail: format!("tag {} used for two concurrent outputs", tag),
            });
        }
        if !source.pool.contains(tag) {
            violations.push(LegalityViolation::StaleConcurrentTag {
                detail: format!("concurrent output tag {} was not in the pool", tag),
            });
        }
    }
    let expected_pool: BTreeSet<Tag> = source
        .pool
        .iter()
        .filter(|t| !fresh.contains(t))
        .cloned()
        .collect();
    if succ.pool != expected_pool {
        violations.push(LegalityViolation::StaleConcurrentTag {
            detail: "pool did not shrink by exactly the allocated tags".to_string(),
        });
    }

    // The final sequential or return output rides the input's thread.
    if let Some(last) = out.last() {
        if matches!(last.kind, MessageKind::SequCall | MessageKind::Ret) && last.tag != *tt {
            violations.push(LegalityViolation::OutputTagMismatch {
                expected: tt.clone(),
                found: last.tag.clone(),
            });
        }
    }

    // A concurrently invoked execution never answers with a return.
    let concurrent_invocation = match input.kind {
        MessageKind::ConcCall => true,
        MessageKind::SequCall => false,
        MessageKind::Ret => source.stack(tt).top().is_some_and(|f| f.concurrent),
    };
    let conc_ret = concurrent_invocation && last_kind == Some(MessageKind::Ret);
    if conc_ret {
        violations.push(LegalityViolation::ReturnFromConcurrentInvocation);
    }

    // No stack other than the input tag's may change.
    let mut other_tags: BTreeSet<&Tag> = source.stacks().map(|(t, _)| t).collect();
    other_tags.extend(succ.stacks().map(|(t, _)| t));
    for tag in other_tags {
        if tag != tt && source.stack(tag) != succ.stack(tag) {
            violations.push(LegalityViolation::ForeignStackChanged { tag: tag.clone() });
        }
    }

    // Stack effect row for (input kind, last output kind); empty output
    // behaves like concurrent-only output.
    let src = source.stack(tt);
    let dst = succ.stack(tt);
    let row = |detail: &str| LegalityViolation::StackRowMismatch {
        input: input.kind,
        last: last_kind,
        detail: detail.to_string(),
    };
    let effective_last = last_kind.unwrap_or(MessageKind::ConcCall);
    let mut top_may_change = false;
    match (input.kind, effective_last) {
        (MessageKind::SequCall, MessageKind::Ret) => {
            if dst != src {
                violations.push(row("immediate completion must leave the stack unchanged"));
            }
        }
        (MessageKind::SequCall | MessageKind::ConcCall, MessageKind::SequCall) => {
            let pushed = dst.depth() == src.depth() + 1
                && dst.frames().zip(src.frames()).all(|(a, b)| a == b);
            if !pushed {
                violations.push(row("suspension must push exactly one invocation"));
            }
        }
        (MessageKind::ConcCall, MessageKind::ConcCall) => {
            if dst != src {
                violations.push(row("concurrent-only output must leave the stack unchanged"));
            }
        }
        (MessageKind::ConcCall, MessageKind::Ret) => {
            // Already reported as a return from a concurrent invocation.
        }
        (MessageKind::SequCall, MessageKind::ConcCall) => {
            violations.push(row(
                "no row: a sequential call must be answered or suspend the service",
            ));
        }
        (MessageKind::Ret, MessageKind::Ret) => {
            if conc_ret {
                // Covered above; the pop row cannot apply.
            } else if src.is_empty() {
                violations.push(row("return input with no suspended invocation"));
            } else if Ok(dst.clone()) != src.pop() {
                violations.push(row("resume completion must pop the top invocation"));
            }
        }
        (MessageKind::Ret, MessageKind::SequCall) => {
            if src.is_empty() {
                violations.push(row("return input with no suspended invocation"));
            } else if dst.depth() != src.depth()
                || !dst
                    .frames()
                    .zip(src.frames())
                    .take(src.depth() - 1)
                    .all(|(a, b)| a == b)
            {
                violations.push(row("re-suspension must replace exactly the top invocation"));
            } else {
                top_may_change = true;
            }
        }
        (MessageKind::Ret, MessageKind::ConcCall) => {
            if src.is_empty() {
                violations.push(row("return input with no suspended invocation"));
            } else if dst.depth() != src.depth()
                || !dst
                    .frames()
                    .zip(src.frames())
                    .take(src.depth() - 1)
                    .all(|(a, b)| a == b)
            {
                violations.push(row("continuation must keep the stack depth"));
            } else {
                top_may_change = true;
                let (old, new) = (src.top().unwrap(), dst.top().unwrap());
                if old.caller != new.caller || old.concurrent != new.concurrent {
                    violations.push(row(
                        "continuation may update only the top invocation's counter and locals",
                    ));
                }
            }
        }
    }

    // Attribute name set and self are immutable.
    if !source.attrs.same_names(&succ.attrs) {
        violations.push(LegalityViolation::AttributeFrameChanged {
            detail: "attribute name set changed".to_string(),
        });
    } else if source.attrs.lookup("self") != succ.attrs.lookup("self") {
        violations.push(LegalityViolation::AttributeFrameChanged {
            detail: "value of self changed".to_string(),
        });
    }

    // When the top invocation survives in changed form its argument
    // entries are immutable.
    if top_may_change {
        if let (Some(old), Some(new)) = (src.top(), dst.top()) {
            if old != new {
                let args_intact = old.arg_names == new.arg_names
                    && old
                        .arg_names
                        .iter()
                        .all(|k| old.env.lookup(k) == new.env.lookup(k));
                if !args_intact {
                    violations.push(LegalityViolation::ArgumentsMutated {
                        detail: format!(
                            "top invocation arguments changed: {} -> {}",
                            old.env, new.env
                        ),
                    });
                }
            }
        }
    }

    LegalityReport { violations }
}
