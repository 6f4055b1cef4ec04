//! Shared helpers and independent oracles for the integration suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use iostd::kernel::{Message, ObjectId, Tag, Value, VarAssignment};
use iostd::semantics::{select_initial, step, tag_pool, ChaosPolicy, MachineState};
use iostd::sim::Configuration;
use iostd::spec::{validate, BehaviorDescription};

pub mod seq_oracle;

pub fn oid(s: &str) -> ObjectId {
    ObjectId::new(s)
}

pub fn env_tag(i: u32) -> Tag {
    Tag::new(oid("env"), i)
}

pub fn corpus_path(name: &str) -> String {
    format!("{}/../../corpus/{}", env!("CARGO_MANIFEST_DIR"), name)
}

pub fn load_behavior(name: &str) -> Arc<BehaviorDescription> {
    let text = std::fs::read_to_string(corpus_path(name)).expect("corpus file");
    let beh = iostd::dsl::parse(&text).expect("corpus parses");
    let report = validate(&beh);
    assert!(
        report.is_clean(),
        "corpus must validate:\n{}",
        report.render_lines()
    );
    Arc::new(beh)
}

pub fn account_attrs(bal: i64) -> VarAssignment {
    VarAssignment::new()
        .with("open", Value::Bool(true))
        .with("bal", Value::Int(bal))
        .with("busy", Value::Bool(false))
}

pub fn bank_config(beh: &Arc<BehaviorDescription>, balances: &[(&str, i64)]) -> Configuration {
    let mut cfg = Configuration::new(oid("env"));
    cfg.corpus_digest = "acceptance".into();
    for (id, bal) in balances {
        cfg.add_object(oid(id), beh.clone(), 4, &account_attrs(*bal))
            .expect("add object");
    }
    cfg
}

pub fn conc(rec: &str, tag: u32, name: &str, args: Vec<Value>) -> Message {
    Message::conc_call(oid("env"), oid(rec), env_tag(tag), name, args)
}

pub fn sequ(rec: &str, tag: u32, name: &str, args: Vec<Value>) -> Message {
    Message::sequ_call(oid("env"), oid(rec), env_tag(tag), name, args)
}

/// Minimal system state for the brute-force oracles: object machines
/// plus per-pair FIFO queues. Deliberately separate from the simulator's
/// configuration type.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleState {
    pub machines: BTreeMap<ObjectId, MachineState>,
    pub queues: BTreeMap<(ObjectId, ObjectId), VecDeque<Message>>,
}

impl OracleState {
    pub fn of_configuration(cfg: &Configuration) -> OracleState {
        OracleState {
            machines: cfg
                .objects
                .iter()
                .map(|(id, slot)| (id.clone(), slot.machine.clone()))
                .collect(),
            queues: cfg.channels.clone(),
        }
    }

    pub fn enqueue(&mut self, m: Message) {
        self.queues
            .entry((m.snd.clone(), m.rec.clone()))
            .or_default()
            .push_back(m);
    }

    pub fn quiescent(&self) -> bool {
        self.queues.values().all(VecDeque::is_empty)
    }

    pub fn attr_view(&self) -> BTreeMap<ObjectId, String> {
        self.machines
            .iter()
            .map(|(id, m)| {
                let view = if m.poisoned {
                    "ERROR".to_string()
                } else {
                    m.state.attrs.to_string()
                };
                (id.clone(), view)
            })
            .collect()
    }
}

/// Depth-first enumeration of every delivery interleaving, independent
/// of the simulator's breadth-first explorer. Returns all distinct
/// reachable states and all quiescent ones.
pub fn oracle_explore(
    behaviors: &BTreeMap<ObjectId, Arc<BehaviorDescription>>,
    env: &ObjectId,
    start: &OracleState,
    policy: ChaosPolicy,
) -> (BTreeSet<OracleState>, BTreeSet<OracleState>) {
    let mut seen: BTreeSet<OracleState> = BTreeSet::new();
    let mut terminals: BTreeSet<OracleState> = BTreeSet::new();
    let mut stack = vec![start.clone()];
    seen.insert(start.clone());
    while let Some(state) = stack.pop() {
        let busy: Vec<(ObjectId, ObjectId)> = state
            .queues
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(k, _)| k.clone())
            .collect();
        if busy.is_empty() {
            terminals.insert(state);
            continue;
        }
        for key in busy {
            let mut base = state.clone();
            let q = base.queues.get_mut(&key).unwrap();
            let message = q.pop_front().unwrap();
            if q.is_empty() {
                base.queues.remove(&key);
            }
            if &message.rec == env {
                if seen.insert(base.clone()) {
                    stack.push(base);
                }
                continue;
            }
            let machine = base.machines.get(&message.rec).expect("configured").clone();
            let beh = behaviors.get(&message.rec).expect("behavior");
            let outcomes = step(beh, &machine, &message, policy).expect("oracle step");
            for outcome in outcomes {
                let mut next = base.clone();
                next.machines
                    .insert(message.rec.clone(), outcome.successor.clone());
                for out in &outcome.out {
                    next.enqueue(out.clone());
                }
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
    }
    (seen, terminals)
}

/// Quiescent attribute views of running the injections one at a time in
/// the given order, via the depth-first oracle.
pub fn oracle_serial_views(
    behaviors: &BTreeMap<ObjectId, Arc<BehaviorDescription>>,
    env: &ObjectId,
    start: &OracleState,
    order: &[&Message],
    policy: ChaosPolicy,
) -> BTreeSet<BTreeMap<ObjectId, String>> {
    let mut states: BTreeSet<OracleState> = BTreeSet::new();
    states.insert(start.clone());
    for injection in order {
        let mut next = BTreeSet::new();
        for s in &states {
            let mut seeded = s.clone();
            seeded.enqueue((*injection).clone());
            let (_, terminals) = oracle_explore(behaviors, env, &seeded, policy);
            next.extend(terminals);
        }
        states = next;
    }
    states.into_iter().map(|s| s.attr_view()).collect()
}

/// Brute-force serializability verdict: the set of interleaved terminal
/// attribute views that no one-at-a-time order reaches.
pub fn oracle_non_serializable_views(
    behaviors: &BTreeMap<ObjectId, Arc<BehaviorDescription>>,
    env: &ObjectId,
    start: &OracleState,
    injections: &[Message],
    policy: ChaosPolicy,
) -> BTreeSet<BTreeMap<ObjectId, String>> {
    let mut serial: BTreeSet<BTreeMap<ObjectId, String>> = BTreeSet::new();
    let orders: Vec<Vec<&Message>> = if injections.len() == 2 {
        vec![
            vec![&injections[0], &injections[1]],
            vec![&injections[1], &injections[0]],
        ]
    } else {
        vec![injections.iter().collect()]
    };
    for order in orders {
        serial.extend(oracle_serial_views(behaviors, env, start, &order, policy));
    }
    let mut seeded = start.clone();
    for injection in injections {
        seeded.enqueue(injection.clone());
    }
    let (_, terminals) = oracle_explore(behaviors, env, &seeded, policy);
    terminals
        .into_iter()
        .map(|t| t.attr_view())
        .filter(|view| !serial.contains(view))
        .collect()
}

/// Build a one-behavior oracle world from a configuration.
pub fn oracle_world(
    cfg: &Configuration,
) -> (
    BTreeMap<ObjectId, Arc<BehaviorDescription>>,
    ObjectId,
    OracleState,
) {
    let behaviors = cfg
        .objects
        .iter()
        .map(|(id, slot)| (id.clone(), slot.behavior.clone()))
        .collect();
    (
        behaviors,
        cfg.env.clone(),
        OracleState::of_configuration(cfg),
    )
}

/// Fresh single-object machine for hand-made scenarios.
pub fn machine_with_attrs(
    beh: &Arc<BehaviorDescription>,
    id: &str,
    pool: u32,
    attrs: &VarAssignment,
) -> MachineState {
    select_initial(beh, &oid(id), &tag_pool(&oid(id), pool), attrs).expect("initial state")
}
