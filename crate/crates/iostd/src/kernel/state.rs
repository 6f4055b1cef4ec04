use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use super::{InvocationStack, Message, MessageKind, Tag, VarAssignment};

/// No free tags left in the pool. Pools only ever shrink, so once this is
/// hit the object can never again start a thread by concurrent output.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
#[error("tag pool exhausted")]
pub struct TagPoolExhausted;

/// Complete state of one object: attribute values, one invocation stack
/// per thread tag, and the pool of tags still free for allocation.
///
/// Stacks for tags that were never used are empty; they are not stored,
/// so structural equality coincides with semantic equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ObjectState {
    pub attrs: VarAssignment,
    stacks: BTreeMap<Tag, InvocationStack>,
    pub pool: BTreeSet<Tag>,
}

fn empty_stack() -> &'static InvocationStack {
    static EMPTY: OnceLock<InvocationStack> = OnceLock::new();
    EMPTY.get_or_init(InvocationStack::empty)
}

impl ObjectState {
    pub fn new(attrs: VarAssignment, pool: BTreeSet<Tag>) -> Self {
        ObjectState {
            attrs,
            stacks: BTreeMap::new(),
            pool,
        }
    }

    /// The stack of a tag; absent tags map to the empty stack.
    pub fn stack(&self, tag: &Tag) -> &InvocationStack {
        self.stacks.get(tag).unwrap_or_else(|| empty_stack())
    }

    /// Store a stack, dropping the entry when it is empty.
    pub fn set_stack(&mut self, tag: Tag, stack: InvocationStack) {
        if stack.is_empty() {
            self.stacks.remove(&tag);
        } else {
            self.stacks.insert(tag, stack);
        }
    }

    /// All nonempty stacks, in tag order.
    pub fn stacks(&self) -> impl Iterator<Item = (&Tag, &InvocationStack)> {
        self.stacks.iter()
    }

    pub fn has_pending_invocations(&self) -> bool {
        !self.stacks.is_empty()
    }

    /// Remove and return the smallest pooled tag. Deterministic so that
    /// runs and explorations are reproducible.
    pub fn alloc_tag(&self) -> Result<(Tag, ObjectState), TagPoolExhausted> {
        let tag = self.pool.iter().next().cloned().ok_or(TagPoolExhausted)?;
        let mut next = self.clone();
        next.pool.remove(&tag);
        Ok((tag, next))
    }
}

impl fmt::Display for ObjectState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at={} st={{", self.attrs)?;
        for (i, (tag, stack)) in self.stacks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={}", tag, stack)?;
        }
        f.write_str("} pt={")?;
        for (i, tag) in self.pool.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", tag)?;
        }
        f.write_str("}")
    }
}

/// One machine transition outcome: the successor state plus the finite
/// sequence of messages emitted by the transition.
///
/// Only the last message may be a sequential call or a return; everything
/// before it is concurrent. Empty output is legal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct StepResult {
    pub successor: ObjectState,
    pub out: Vec<Message>,
}

impl StepResult {
    /// Kind of the final output, `None` for empty output (which behaves
    /// like concurrent-only output).
    pub fn last_kind(&self) -> Option<MessageKind> {
        self.out.last().map(|m| m.kind)
    }
}
