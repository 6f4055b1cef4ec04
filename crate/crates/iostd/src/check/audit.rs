//! Trace audit: re-checks every delivery against the machine-level
//! transition restrictions, independently of the simulator that wrote
//! the trace, plus whole-trace bookkeeping (tag-pool monotonicity and
//! call/return accounting).

use std::collections::BTreeMap;

use crate::kernel::{check_step_legal, Message, MessageKind, ObjectId, StepResult, Tag};
use crate::semantics::MachineState;
use crate::sim::canon::parse_machine_state;
use crate::sim::{StopReason, Trace, TraceEvent};

use super::finding::{sort_findings, Finding};

pub const MALFORMED_TRACE: &str = "malformed-trace";
pub const POOL_GREW: &str = "pool-grew";
pub const ORPHAN_RET: &str = "orphan-ret";
pub const MISSING_RETURN: &str = "missing-return";

struct PendingStep {
    event_index: usize,
    object: ObjectId,
    message: Message,
    chaos: bool,
    emits: Vec<Message>,
}

fn step_subject(index: usize) -> String {
    format!("step {:04}", index)
}

/// Audit one trace. Chaos steps sit outside the transition discipline
/// and are skipped by the legality re-check; everything else must pass
/// it exactly as the kernel defines it.
pub fn audit_trace(trace: &Trace) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut current: BTreeMap<ObjectId, MachineState> = BTreeMap::new();
    let mut pending: Option<PendingStep> = None;
    // Sequential calls in flight per tag: +1 per sequential call sent,
    // -1 per return sent.
    let mut outstanding: BTreeMap<Tag, i64> = BTreeMap::new();
    // Tags whose thread ran into underspecified behavior: a chaos step
    // may swallow the call, so no answer can be demanded afterwards.
    let mut swallowed: std::collections::BTreeSet<Tag> = std::collections::BTreeSet::new();

    let mut account =
        |message: &Message, index: usize, findings: &mut Vec<Finding>| match message.kind {
            MessageKind::SequCall => {
                *outstanding.entry(message.tag.clone()).or_insert(0) += 1;
            }
            MessageKind::Ret => {
                let n = outstanding.entry(message.tag.clone()).or_insert(0);
                *n -= 1;
                if *n < 0 {
                    findings.push(Finding::error(
                        ORPHAN_RET,
                        step_subject(index),
                        format!(
                            "return on tag {} without a matching sequential call",
                            message.tag
                        ),
                    ));
                }
            }
            MessageKind::ConcCall => {}
        };

    for (index, event) in trace.events.iter().enumerate() {
        match event {
            TraceEvent::Inject { message } => account(message, index, &mut findings),
            TraceEvent::Deliver { message, chaos, .. } => {
                if *chaos {
                    swallowed.insert(message.tag.clone());
                }
                if pending.is_some() {
                    findings.push(Finding::error(
                        MALFORMED_TRACE,
                        step_subject(index),
                        "delivery before the previous step's state line",
                    ));
                    pending = None;
                }
                if message.rec != trace.env {
                    pending = Some(PendingStep {
                        event_index: index,
                        object: message.rec.clone(),
                        message: message.clone(),
                        chaos: *chaos,
                        emits: Vec::new(),
                    });
                }
            }
            TraceEvent::Emit { message } => {
                account(message, index, &mut findings);
                match &mut pending {
                    Some(step) => step.emits.push(message.clone()),
                    None => findings.push(Finding::error(
                        MALFORMED_TRACE,
                        step_subject(index),
                        "emit outside a delivery",
                    )),
                }
            }
            TraceEvent::State { object, digest } => {
                let parsed = match parse_machine_state(object, digest) {
                    Ok(state) => state,
                    Err(e) => {
                        findings.push(Finding::error(
                            MALFORMED_TRACE,
                            step_subject(index),
                            format!("unparseable state digest: {}", e),
                        ));
                        pending = None;
                        continue;
                    }
                };
                let previous = current.get(object).cloned();
                if let Some(step) = pending.take() {
                    if &step.object != object {
                        findings.push(Finding::error(
                            MALFORMED_TRACE,
                            step_subject(index),
                            "state line for a different object than the delivery",
                        ));
                    } else if let Some(previous) = &previous {
                        audit_step(&mut findings, &step, previous, &parsed);
                    } else {
                        findings.push(Finding::error(
                            MALFORMED_TRACE,
                            step_subject(step.event_index),
                            "delivery to an object with no recorded prior state",
                        ));
                    }
                }
                current.insert(object.clone(), parsed);
            }
            TraceEvent::Abort { .. } => {}
        }
    }
    if pending.is_some() {
        findings.push(Finding::error(
            MALFORMED_TRACE,
            step_subject(trace.events.len()),
            "trace ends inside a step",
        ));
    }

    // Every sequential call eventually gets exactly one return on its
    // tag, unless the footer owns up to the leaked invocation. Traces
    // that stopped early cannot be held to this.
    if trace.stop == StopReason::Quiescent {
        for (tag, n) in &outstanding {
            if *n > 0
                && !swallowed.contains(tag)
                && !trace.leaked.iter().any(|(_, leaked, _)| leaked == tag)
            {
                findings.push(Finding::error(
                    MISSING_RETURN,
                    format!("tag {}", tag),
                    format!(
                        "{} sequential call(s) never answered and no leak declared",
                        n
                    ),
                ));
            }
        }
    }

    sort_findings(&mut findings);
    findings
}

fn audit_step(
    findings: &mut Vec<Finding>,
    step: &PendingStep,
    previous: &MachineState,
    next: &MachineState,
) {
    // Chaos steps and steps around the trap state are outside the
    // transition discipline.
    if step.chaos || previous.poisoned || next.poisoned {
        return;
    }
    let subject = step_subject(step.event_index);
    if !next.state.pool.is_subset(&previous.state.pool) {
        findings.push(Finding::error(
            POOL_GREW,
            subject.clone(),
            "tag pool gained a tag; pools only ever shrink",
        ));
    }
    let result = StepResult {
        successor: next.state.clone(),
        out: step.emits.clone(),
    };
    let report = check_step_legal(&previous.state, &step.message, &result);
    for violation in report.violations {
        findings.push(
            Finding::error(violation.code(), subject.clone(), violation.to_string())
                .with_witness(format!("deliver {}", step.message)),
        );
    }
}
