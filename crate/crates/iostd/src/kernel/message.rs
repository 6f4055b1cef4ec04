use std::fmt;

use super::{ObjectId, Tag, Value, VarAssignment};

/// Distinguished message name of return messages.
pub const RET_NAME: &str = "ret";

/// Communication discipline of a message.
///
/// A sequential call transfers the sender's thread of activity to the
/// callee and blocks until the matching return message. A concurrent call
/// starts a new thread under a freshly allocated tag. A return message
/// answers a sequential call on the same thread.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum MessageKind {
    SequCall,
    ConcCall,
    Ret,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::SequCall => "seq",
            MessageKind::ConcCall => "conc",
            MessageKind::Ret => "ret",
        })
    }
}

/// One message in flight between objects.
///
/// Arguments are positional and stored under the names `arg0`, `arg1`, ….
/// Return values (if any) ride in the arguments of the return message.
/// The kind is `Ret` exactly when the name is [`RET_NAME`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Message {
    pub snd: ObjectId,
    pub rec: ObjectId,
    pub tag: Tag,
    pub name: String,
    pub args: VarAssignment,
    pub kind: MessageKind,
}

/// Positional argument key, `arg0`, `arg1`, …
pub(crate) fn arg_key(index: usize) -> String {
    format!("arg{}", index)
}

impl Message {
    pub fn sequ_call(
        snd: ObjectId,
        rec: ObjectId,
        tag: Tag,
        name: impl Into<String>,
        args: Vec<Value>,
    ) -> Self {
        Message {
            snd,
            rec,
            tag,
            name: name.into(),
            args: positional(args),
            kind: MessageKind::SequCall,
        }
    }

    pub fn conc_call(
        snd: ObjectId,
        rec: ObjectId,
        tag: Tag,
        name: impl Into<String>,
        args: Vec<Value>,
    ) -> Self {
        Message {
            snd,
            rec,
            tag,
            name: name.into(),
            args: positional(args),
            kind: MessageKind::ConcCall,
        }
    }

    pub fn ret(snd: ObjectId, rec: ObjectId, tag: Tag, args: Vec<Value>) -> Self {
        Message {
            snd,
            rec,
            tag,
            name: RET_NAME.to_string(),
            args: positional(args),
            kind: MessageKind::Ret,
        }
    }

    /// The kind matches the name: `Ret` iff the name is `ret`.
    pub fn kind_consistent(&self) -> bool {
        (self.kind == MessageKind::Ret) == (self.name == RET_NAME)
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Argument values in positional order.
    pub fn positional_args(&self) -> Vec<&Value> {
        let mut out = Vec::with_capacity(self.args.len());
        for i in 0..self.args.len() {
            match self.args.lookup(&arg_key(i)) {
                Some(v) => out.push(v),
                // Non-positional keys: fall back to name order.
                None => return self.args.iter().map(|(_, v)| v).collect(),
            }
        }
        out
    }
}

fn positional(args: Vec<Value>) -> VarAssignment {
    args.into_iter()
        .enumerate()
        .map(|(i, v)| (arg_key(i), v))
        .collect()
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MessageKind::Ret => write!(f, "ret[{}](", self.tag)?,
            kind => write!(f, "{} {}[{}](", kind, self.name, self.tag)?,
        }
        for (i, v) in self.positional_args().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", v)?;
        }
        f.write_str(")")
    }
}
