//! Bounded exhaustive exploration of interleavings: breadth-first over
//! every scheduler choice (channel pick times successor pick), with
//! configurations deduplicated by canonical digest.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use crate::kernel::{Message, ObjectId};
use crate::semantics::{step, ChaosPolicy, FiredTransition};

use super::config::Configuration;
use super::script::Script;
use super::trace::{StopReason, Trace, TraceEvent};
use super::SimError;

/// One explored step, as seen by invariant checks.
pub struct StepInfo<'a> {
    pub pre: &'a Configuration,
    pub post: &'a Configuration,
    pub message: &'a Message,
    pub receiver: &'a ObjectId,
    pub chaos: bool,
    /// Name of the service a fresh execution started for, if one did.
    pub started: Option<&'a str>,
    pub fired: Option<&'a FiredTransition>,
}

/// A named predicate over explored steps. Returning `Some(detail)` flags
/// a violation; the explorer keeps the shortest witness per invariant.
pub struct Invariant {
    pub name: String,
    #[allow(clippy::type_complexity)]
    pub check: Box<dyn Fn(&StepInfo) -> Option<String>>,
}

impl Invariant {
    pub fn new(
        name: impl Into<String>,
        check: impl Fn(&StepInfo) -> Option<String> + 'static,
    ) -> Self {
        Invariant {
            name: name.into(),
            check: Box::new(check),
        }
    }
}

/// Flags any step that fell to the chaos policy: under the reject policy
/// that is exactly a reachable trap state.
pub fn chaos_reached() -> Invariant {
    Invariant::new("chaos-reached", |info: &StepInfo| {
        if info.chaos {
            Some(format!(
                "{} fell to the chaos policy on {}",
                info.receiver, info.message
            ))
        } else {
            None
        }
    })
}

/// A terminal (quiescent) configuration and the shortest trace to it.
#[derive(Debug)]
pub struct TerminalInfo {
    pub config: Configuration,
    pub trace: Trace,
}

/// A violated invariant with the shortest witness trace.
#[derive(Debug)]
pub struct Violation {
    pub invariant: String,
    pub detail: String,
    pub trace: Trace,
}

/// Exploration result.
#[derive(Debug)]
pub struct ExplorationReport {
    /// Distinct configurations reached (including the initial one).
    pub reachable: usize,
    /// Digest of every reached configuration.
    pub reachable_digests: BTreeSet<String>,
    pub terminals: Vec<TerminalInfo>,
    pub violations: Vec<Violation>,
    /// Total hits per invariant, beyond the first witness kept.
    pub violation_counts: BTreeMap<String, usize>,
    pub truncated: bool,
}

impl ExplorationReport {
    /// Header counts, terminal digests, then one block per violation
    /// witness with its embedded trace.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# exploration reachable={} terminals={} violations={}{}",
            self.reachable,
            self.terminals.len(),
            self.violations.len(),
            if self.truncated { " truncated" } else { "" },
        );
        for t in &self.terminals {
            let _ = writeln!(out, "terminal | {}", t.config.digest());
        }
        for v in &self.violations {
            let count = self
                .violation_counts
                .get(&v.invariant)
                .copied()
                .unwrap_or(1);
            let _ = writeln!(
                out,
                "violation | {} | {} | occurrences {}",
                v.invariant, v.detail, count
            );
            for line in v.trace.render().lines() {
                let _ = writeln!(out, "  {}", line);
            }
        }
        out
    }

    pub fn has_violation(&self, invariant: &str) -> bool {
        self.violations.iter().any(|v| v.invariant == invariant)
    }
}

struct Node {
    config: Configuration,
    /// Parent node and the events of the step that led here.
    parent: Option<(usize, Vec<TraceEvent>)>,
}

/// Explore every interleaving of deliveries reachable from `cfg` after
/// injecting the whole script up front. `bound` caps the number of
/// distinct configurations; exceeding it returns the partial report
/// inside the error.
pub fn explore(
    cfg: &Configuration,
    script: &Script,
    bound: usize,
    policy: ChaosPolicy,
    invariants: &[Invariant],
) -> Result<ExplorationReport, SimError> {
    let mut root = cfg.clone();
    let mut root_events: Vec<TraceEvent> = Vec::new();
    for (id, slot) in &root.objects {
        root_events.push(TraceEvent::State {
            object: id.clone(),
            digest: slot.machine.digest(),
        });
    }
    for injection in &script.injections {
        root_events.push(TraceEvent::Inject {
            message: injection.message.clone(),
        });
    }
    for injection in &script.injections {
        root.enqueue(injection.message.clone());
    }

    let mut nodes: Vec<Node> = Vec::new();
    let mut visited: BTreeMap<String, usize> = BTreeMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut terminals: Vec<TerminalInfo> = Vec::new();
    let mut violations: Vec<Violation> = Vec::new();
    let mut violation_counts: BTreeMap<String, usize> = BTreeMap::new();

    if bound == 0 {
        return Err(SimError::BudgetExceeded {
            partial: Box::new(ExplorationReport {
                reachable: 0,
                reachable_digests: BTreeSet::new(),
                terminals,
                violations,
                violation_counts,
                truncated: true,
            }),
        });
    }

    let digest = root.digest();
    nodes.push(Node {
        config: root,
        parent: Some((usize::MAX, root_events)),
    });
    visited.insert(digest, 0);
    queue.push_back(0);

    while let Some(index) = queue.pop_front() {
        let busy = nodes[index].config.busy_channels();
        if busy.is_empty() {
            let config = nodes[index].config.clone();
            let trace = rebuild_trace(&nodes, index, &config, policy, StopReason::Quiescent);
            terminals.push(TerminalInfo { config, trace });
            continue;
        }
        for channel in busy {
            let pre = nodes[index].config.clone();
            let message = pre.channels[&channel]
                .front()
                .expect("busy channel")
                .clone();

            if message.rec == pre.env {
                let mut post = pre.clone();
                post.channels.get_mut(&channel).expect("busy").pop_front();
                let events = vec![TraceEvent::Deliver {
                    message: message.clone(),
                    choice: 0,
                    of: 1,
                    chaos: false,
                }];
                admit(
                    post,
                    events,
                    index,
                    bound,
                    &mut nodes,
                    &mut visited,
                    &mut queue,
                )
                .map_err(|_| budget_error(&visited, &terminals, &violations, &violation_counts))?;
                continue;
            }

            let slot = pre.objects.get(&message.rec).ok_or_else(|| {
                SimError::Config(format!("receiver {} is not configured", message.rec))
            })?;
            let outcomes = step(&slot.behavior, &slot.machine, &message, policy)?;
            let of = outcomes.len();
            for (choice, outcome) in outcomes.iter().enumerate() {
                let mut post = pre.clone();
                post.channels.get_mut(&channel).expect("busy").pop_front();
                for out in &outcome.out {
                    post.enqueue(out.clone());
                }
                post.objects.get_mut(&message.rec).expect("checked").machine =
                    outcome.successor.clone();

                let mut events = vec![TraceEvent::Deliver {
                    message: message.clone(),
                    choice,
                    of,
                    chaos: outcome.chaos,
                }];
                for out in &outcome.out {
                    events.push(TraceEvent::Emit {
                        message: out.clone(),
                    });
                }
                events.push(TraceEvent::State {
                    object: message.rec.clone(),
                    digest: outcome.successor.digest(),
                });

                let started = outcome
                    .fired
                    .as_ref()
                    .filter(|f| !f.resumed)
                    .map(|f| f.service.as_str());
                let info = StepInfo {
                    pre: &pre,
                    post: &post,
                    message: &message,
                    receiver: &message.rec,
                    chaos: outcome.chaos,
                    started,
                    fired: outcome.fired.as_ref(),
                };
                for invariant in invariants {
                    if let Some(detail) = (invariant.check)(&info) {
                        *violation_counts.entry(invariant.name.clone()).or_insert(0) += 1;
                        if !violations.iter().any(|v| v.invariant == invariant.name) {
                            // The witness path stops right after the
                            // violating step, like a budget-limited run.
                            let mut witness_events = events.clone();
                            let trace = rebuild_trace_with(
                                &nodes,
                                index,
                                &post,
                                policy,
                                StopReason::StepBudget,
                                &mut witness_events,
                            );
                            violations.push(Violation {
                                invariant: invariant.name.clone(),
                                detail,
                                trace,
                            });
                        }
                    }
                }

                admit(
                    post,
                    events,
                    index,
                    bound,
                    &mut nodes,
                    &mut visited,
                    &mut queue,
                )
                .map_err(|_| budget_error(&visited, &terminals, &violations, &violation_counts))?;
            }
        }
    }

    Ok(ExplorationReport {
        reachable: visited.len(),
        reachable_digests: visited.keys().cloned().collect(),
        terminals,
        violations,
        violation_counts,
        truncated: false,
    })
}

struct Budget;

fn admit(
    config: Configuration,
    events: Vec<TraceEvent>,
    parent: usize,
    bound: usize,
    nodes: &mut Vec<Node>,
    visited: &mut BTreeMap<String, usize>,
    queue: &mut VecDeque<usize>,
) -> Result<(), Budget> {
    let digest = config.digest();
    if visited.contains_key(&digest) {
        return Ok(());
    }
    if visited.len() >= bound {
        return Err(Budget);
    }
    let index = nodes.len();
    nodes.push(Node {
        config,
        parent: Some((parent, events)),
    });
    visited.insert(digest, index);
    queue.push_back(index);
    Ok(())
}

fn budget_error(
    visited: &BTreeMap<String, usize>,
    terminals: &[TerminalInfo],
    violations: &[Violation],
    violation_counts: &BTreeMap<String, usize>,
) -> SimError {
    SimError::BudgetExceeded {
        partial: Box::new(ExplorationReport {
            reachable: visited.len(),
            reachable_digests: visited.keys().cloned().collect(),
            terminals: terminals
                .iter()
                .map(|t| TerminalInfo {
                    config: t.config.clone(),
                    trace: t.trace.clone(),
                })
                .collect(),
            violations: violations
                .iter()
                .map(|v| Violation {
                    invariant: v.invariant.clone(),
                    detail: v.detail.clone(),
                    trace: v.trace.clone(),
                })
                .collect(),
            violation_counts: violation_counts.clone(),
            truncated: true,
        }),
    }
}

fn rebuild_trace(
    nodes: &[Node],
    index: usize,
    config: &Configuration,
    policy: ChaosPolicy,
    stop: StopReason,
) -> Trace {
    let mut extra = Vec::new();
    rebuild_trace_with(nodes, index, config, policy, stop, &mut extra)
}

/// Assemble the event path from the root to `index`, then `extra`.
fn rebuild_trace_with(
    nodes: &[Node],
    index: usize,
    config: &Configuration,
    policy: ChaosPolicy,
    stop: StopReason,
    extra: &mut Vec<TraceEvent>,
) -> Trace {
    let mut chunks: Vec<&Vec<TraceEvent>> = Vec::new();
    let mut cursor = Some(index);
    while let Some(i) = cursor {
        match &nodes[i].parent {
            Some((parent, events)) => {
                chunks.push(events);
                cursor = if *parent == usize::MAX {
                    None
                } else {
                    Some(*parent)
                };
            }
            None => cursor = None,
        }
    }
    let mut events: Vec<TraceEvent> = Vec::new();
    for chunk in chunks.into_iter().rev() {
        events.extend(chunk.iter().cloned());
    }
    events.append(extra);
    let leaked = if stop == StopReason::Quiescent {
        config.leaked()
    } else {
        Vec::new()
    };
    Trace {
        corpus_digest: config.corpus_digest.clone(),
        spec_files: config.spec_files.clone(),
        scheduler: "exhaustive".to_string(),
        seed: None,
        policy: policy.to_string(),
        objects: config
            .objects
            .iter()
            .map(|(id, slot)| (id.clone(), slot.behavior.name.clone()))
            .collect(),
        env: config.env.clone(),
        events,
        stop,
        leaked,
    }
}
