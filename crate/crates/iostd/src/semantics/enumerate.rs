//! Explicit enumeration of the reachable machine of a single object
//! under a closed, finite input alphabet.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write;

use crate::kernel::{Message, ObjectId, Tag};
use crate::spec::domains::assignments;
use crate::spec::{BehaviorDescription, Domain};

use super::machine::{
    chaos_outcomes, initial_states, step, ChaosPolicy, MachineState, SemanticsError,
};

/// One explicit machine transition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct MachineTransition {
    pub from: MachineState,
    pub input: Message,
    pub to: MachineState,
    pub out: Vec<Message>,
}

/// An explicitly enumerated machine: states reachable from the initial
/// set under every input of the alphabet.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExplicitMachine {
    pub behavior: String,
    pub object: ObjectId,
    pub initial: Vec<MachineState>,
    pub inputs: Vec<Message>,
    pub states: Vec<MachineState>,
    pub transitions: Vec<MachineTransition>,
    pub truncated: bool,
}

impl ExplicitMachine {
    /// Ordered text export: a header with the initial-state digests, then
    /// one line per transition. Digests are canonical printed forms, so
    /// two exports diff cleanly.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# machine {} object={}", self.behavior, self.object);
        let _ = writeln!(
            out,
            "# states={} inputs={} transitions={}",
            self.states.len(),
            self.inputs.len(),
            self.transitions.len()
        );
        if self.truncated {
            let _ = writeln!(out, "# truncated: state budget reached");
        }
        for s in &self.initial {
            let _ = writeln!(out, "# initial | {}", s);
        }
        for t in &self.transitions {
            let outputs: Vec<String> = t
                .out
                .iter()
                .map(|m| format!("{} to {}", m, m.rec))
                .collect();
            let _ = writeln!(
                out,
                "{} | {} from {} | {} | [{}]",
                t.from,
                t.input,
                t.input.snd,
                t.to,
                outputs.join(", ")
            );
        }
        out
    }

    /// Successor count per (state, input) pair, for enabledness checks.
    pub fn outgoing(&self, state: &MachineState, input: &Message) -> usize {
        self.transitions
            .iter()
            .filter(|t| &t.from == state && &t.input == input)
            .count()
    }
}

/// The finite input alphabet of one object: every call shape the behavior
/// declares (under its allowed disciplines) plus return messages, over
/// the given senders and thread tags.
pub fn input_alphabet(
    beh: &BehaviorDescription,
    id: &ObjectId,
    peers: &[ObjectId],
    tags: &[Tag],
) -> Vec<Message> {
    let mut inputs = BTreeSet::new();
    for svc in &beh.services {
        let decls: Vec<(String, Domain)> = svc
            .params
            .iter()
            .map(|p| (p.name.clone(), p.domain.clone()))
            .collect();
        for args_env in assignments(&decls) {
            let args: Vec<_> = svc
                .params
                .iter()
                .map(|p| args_env.lookup(&p.name).cloned().expect("enumerated"))
                .collect();
            for sender in peers {
                for tag in tags {
                    if svc.callable.allows_sequential() {
                        inputs.insert(Message::sequ_call(
                            sender.clone(),
                            id.clone(),
                            tag.clone(),
                            svc.name.clone(),
                            args.clone(),
                        ));
                    }
                    if svc.callable.allows_concurrent() {
                        inputs.insert(Message::conc_call(
                            sender.clone(),
                            id.clone(),
                            tag.clone(),
                            svc.name.clone(),
                            args.clone(),
                        ));
                    }
                }
            }
        }
    }
    // Return messages: the no-argument shape always, plus every shape a
    // return pattern with declared binder domains can match.
    let mut ret_shapes: BTreeSet<Vec<crate::kernel::Value>> = BTreeSet::new();
    ret_shapes.insert(Vec::new());
    for svc in &beh.services {
        for t in &svc.transitions {
            if t.pattern.name != crate::kernel::RET_NAME {
                continue;
            }
            let decls: Option<Vec<(String, Domain)>> = t
                .pattern
                .binders
                .iter()
                .map(|b| b.domain.clone().map(|d| (b.name.clone(), d)))
                .collect();
            if let Some(decls) = decls {
                for env in assignments(&decls) {
                    let args: Vec<_> = t
                        .pattern
                        .binders
                        .iter()
                        .map(|b| env.lookup(&b.name).cloned().expect("enumerated"))
                        .collect();
                    ret_shapes.insert(args);
                }
            }
        }
    }
    for args in ret_shapes {
        for sender in peers {
            for tag in tags {
                inputs.insert(Message::ret(
                    sender.clone(),
                    id.clone(),
                    tag.clone(),
                    args.clone(),
                ));
            }
        }
    }
    inputs.into_iter().collect()
}

/// Breadth-first enumeration of the reachable machine.
///
/// Inputs that the harness would reject (stray returns, tag reuse) fall
/// to the chaos policy here: the machine itself cannot refuse an input.
/// When the state budget is hit the partial machine comes back inside
/// the error, marked truncated; transitions into dropped states are
/// omitted.
pub fn enumerate_machine(
    beh: &BehaviorDescription,
    id: &ObjectId,
    pool: &BTreeSet<Tag>,
    peers: &[ObjectId],
    tags: &[Tag],
    bound: usize,
    policy: ChaosPolicy,
) -> Result<ExplicitMachine, SemanticsError> {
    let initial = initial_states(beh, id, pool)?;
    let inputs = input_alphabet(beh, id, peers, tags);

    let mut states: BTreeSet<MachineState> = initial.iter().cloned().collect();
    // The initial set is always kept whole; a budget below it skips
    // expansion entirely.
    let mut truncated = states.len() > bound;
    let mut queue: VecDeque<MachineState> = if truncated {
        VecDeque::new()
    } else {
        initial.iter().cloned().collect()
    };
    let mut transitions: Vec<MachineTransition> = Vec::new();

    while let Some(state) = queue.pop_front() {
        for input in &inputs {
            let outcomes = match step(beh, &state, input, policy) {
                Ok(outcomes) => outcomes,
                Err(SemanticsError::IllegalInput { .. }) => chaos_outcomes(beh, &state, policy),
                Err(e) => return Err(e),
            };
            for outcome in outcomes {
                let transition = MachineTransition {
                    from: state.clone(),
                    input: input.clone(),
                    to: outcome.successor.clone(),
                    out: outcome.out,
                };
                if states.contains(&outcome.successor) {
                    transitions.push(transition);
                } else if states.len() < bound {
                    states.insert(outcome.successor.clone());
                    queue.push_back(outcome.successor);
                    transitions.push(transition);
                } else {
                    truncated = true;
                }
            }
        }
    }

    transitions.sort();
    transitions.dedup();
    let machine = ExplicitMachine {
        behavior: beh.name.clone(),
        object: id.clone(),
        initial,
        inputs,
        states: states.into_iter().collect(),
        transitions,
        truncated,
    };
    if truncated {
        Err(SemanticsError::BudgetExceeded {
            explored: machine.states.len(),
            partial: Box::new(machine),
        })
    } else {
        Ok(machine)
    }
}
