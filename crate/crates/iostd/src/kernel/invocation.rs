use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::{ObjectId, VarAssignment};

/// Program counter of a suspended invocation: a diagram state of the
/// service the invocation belongs to, qualified by the service name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ProgramCounter {
    pub service: String,
    pub state: String,
}

impl ProgramCounter {
    pub fn new(service: impl Into<String>, state: impl Into<String>) -> Self {
        ProgramCounter {
            service: service.into(),
            state: state.into(),
        }
    }
}

impl fmt::Display for ProgramCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.service, self.state)
    }
}

/// One suspended service execution sitting on a thread's stack.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ServiceInvocation {
    /// Arguments, binders and locals of the execution.
    pub env: VarAssignment,
    /// The `env` entries bound at invocation time (pattern binders and the
    /// sender). These entries never change while the invocation is stacked;
    /// locals may.
    pub arg_names: BTreeSet<String>,
    pub pc: ProgramCounter,
    /// Where the eventual return message is to be delivered.
    pub caller: ObjectId,
    /// Whether the execution was started by a concurrent call. A
    /// concurrently started execution never emits a final return message.
    pub concurrent: bool,
}

impl fmt::Display for ServiceInvocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(env={} args={{", self.env)?;
        for (i, a) in self.arg_names.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(a)?;
        }
        write!(
            f,
            "}} pc={} caller={} {})",
            self.pc,
            self.caller,
            if self.concurrent { "conc" } else { "seq" }
        )
    }
}

/// Popping an empty stack. Signals a broken transition upstream; the
/// legality checker reports the same condition as a stack-row violation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
#[error("pop of an empty invocation stack")]
pub struct StackUnderflow;

/// LIFO stack of suspended invocations, top at the back.
///
/// Stacks are persistent values: `push` and `pop` return new stacks.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct InvocationStack(Vec<ServiceInvocation>);

impl InvocationStack {
    pub fn empty() -> Self {
        InvocationStack::default()
    }

    pub fn push(&self, inv: ServiceInvocation) -> InvocationStack {
        let mut frames = self.0.clone();
        frames.push(inv);
        InvocationStack(frames)
    }

    pub fn pop(&self) -> Result<InvocationStack, StackUnderflow> {
        if self.0.is_empty() {
            return Err(StackUnderflow);
        }
        let mut frames = self.0.clone();
        frames.pop();
        Ok(InvocationStack(frames))
    }

    pub fn top(&self) -> Option<&ServiceInvocation> {
        self.0.last()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Frames from bottom to top.
    pub fn frames(&self) -> impl Iterator<Item = &ServiceInvocation> {
        self.0.iter()
    }

    /// New stack with the top frame replaced.
    pub fn replace_top(&self, inv: ServiceInvocation) -> Result<InvocationStack, StackUnderflow> {
        Ok(self.pop()?.push(inv))
    }
}

impl fmt::Display for InvocationStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, frame) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}", frame)?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Value;

    fn inv(name: &str) -> ServiceInvocation {
        ServiceInvocation {
            env: VarAssignment::new().with("a", Value::Int(1)),
            arg_names: BTreeSet::from(["a".to_string()]),
            pc: ProgramCounter::new(name, "Wait"),
            caller: crate::kernel::ObjectId::new("env"),
            concurrent: false,
        }
    }

    #[test]
    fn push_onto_empty() {
        let s = InvocationStack::empty().push(inv("a"));
        assert_eq!(s.depth(), 1);
        assert_eq!(s.top().unwrap().pc.service, "a");
    }

    #[test]
    fn push_sets_top() {
        let s = InvocationStack::empty().push(inv("a")).push(inv("b"));
        assert_eq!(s.depth(), 2);
        assert_eq!(s.top().unwrap().pc.service, "b");
    }

    #[test]
    fn pop_of_singleton_is_empty() {
        let s = InvocationStack::empty().push(inv("a"));
        assert!(s.pop().unwrap().is_empty());
    }

    #[test]
    fn pop_of_empty_underflows() {
        assert_eq!(InvocationStack::empty().pop(), Err(StackUnderflow));
    }

    #[test]
    fn top_after_pop_of_two() {
        let s = InvocationStack::empty().push(inv("a")).push(inv("b"));
        assert_eq!(s.pop().unwrap().top().unwrap().pc.service, "a");
    }
}
