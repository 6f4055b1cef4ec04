use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;
use std::sync::Arc;

use crate::kernel::{Message, ObjectId, Tag, VarAssignment};
use crate::semantics::{select_initial, tag_pool, MachineState};
use crate::spec::BehaviorDescription;

use super::SimError;

/// One configured object: its behavior and its current machine state.
#[derive(Clone, Debug)]
pub struct ObjectSlot {
    pub behavior: Arc<BehaviorDescription>,
    pub machine: MachineState,
}

/// A complete system snapshot: every object's state plus the in-flight
/// messages, one order-preserving queue per (sender, receiver) pair.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub objects: BTreeMap<ObjectId, ObjectSlot>,
    pub channels: BTreeMap<(ObjectId, ObjectId), VecDeque<Message>>,
    /// The environment: source of scripted injections, sink for answers.
    pub env: ObjectId,
    /// Digest of the behavior sources, recorded into trace headers.
    pub corpus_digest: String,
    /// Behavior files behind this configuration, (path, digest) pairs;
    /// recorded into trace headers so a trace names its inputs.
    pub spec_files: Vec<(String, String)>,
}

impl Configuration {
    pub fn new(env: ObjectId) -> Self {
        Configuration {
            objects: BTreeMap::new(),
            channels: BTreeMap::new(),
            env,
            corpus_digest: String::new(),
            spec_files: Vec::new(),
        }
    }

    /// Add an object in the initial state selected by `attrs`, with a
    /// fresh tag pool `id:0 .. id:pool_size-1`.
    pub fn add_object(
        &mut self,
        id: ObjectId,
        behavior: Arc<BehaviorDescription>,
        pool_size: u32,
        attrs: &VarAssignment,
    ) -> Result<(), SimError> {
        if id == self.env || self.objects.contains_key(&id) {
            return Err(SimError::Config(format!(
                "object id `{}` is already taken",
                id
            )));
        }
        let machine = select_initial(&behavior, &id, &tag_pool(&id, pool_size), attrs)?;
        self.objects.insert(id, ObjectSlot { behavior, machine });
        Ok(())
    }

    pub fn enqueue(&mut self, message: Message) {
        self.channels
            .entry((message.snd.clone(), message.rec.clone()))
            .or_default()
            .push_back(message);
    }

    /// Nonempty channels in canonical order.
    pub fn busy_channels(&self) -> Vec<(ObjectId, ObjectId)> {
        self.channels
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// All channels empty: nothing left to deliver.
    pub fn is_quiescent(&self) -> bool {
        self.channels.values().all(VecDeque::is_empty)
    }

    /// Suspended invocations still stacked anywhere; at quiescence these
    /// are executions whose callers will never hear back.
    pub fn leaked(&self) -> Vec<(ObjectId, Tag, String)> {
        let mut out = Vec::new();
        for (id, slot) in &self.objects {
            for (tag, stack) in slot.machine.state.stacks() {
                if let Some(top) = stack.top() {
                    out.push((id.clone(), tag.clone(), top.pc.to_string()));
                }
            }
        }
        out
    }

    /// Canonical sorted print of all object states and channel contents;
    /// the unit of configuration deduplication.
    pub fn digest(&self) -> String {
        let mut out = String::new();
        for (id, slot) in &self.objects {
            let _ = write!(out, "obj {} {} ;; ", id, slot.machine);
        }
        for ((snd, rec), queue) in &self.channels {
            if queue.is_empty() {
                continue;
            }
            let msgs: Vec<String> = queue.iter().map(|m| m.to_string()).collect();
            let _ = write!(out, "chan {}->{} [{}] ;; ", snd, rec, msgs.join(","));
        }
        out
    }

    /// Attribute view: each object's attribute assignment (poisoned
    /// objects are reported under a distinguished key form).
    pub fn attr_view(&self) -> BTreeMap<ObjectId, String> {
        self.objects
            .iter()
            .map(|(id, slot)| {
                let view = if slot.machine.poisoned {
                    "ERROR".to_string()
                } else {
                    slot.machine.state.attrs.to_string()
                };
                (id.clone(), view)
            })
            .collect()
    }
}
