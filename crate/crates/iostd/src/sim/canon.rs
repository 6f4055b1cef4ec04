//! Parsers for the canonical printed forms of kernel values, so that
//! traces can be audited independently of the process that wrote them.
//! Printing lives on the types' `Display` implementations; this module
//! is their inverse.

use std::collections::BTreeSet;
use std::fmt;
use std::iter::Peekable;
use std::str::Chars;

use crate::kernel::{
    InvocationStack, Message, MessageKind, ObjectId, ObjectState, ProgramCounter,
    ServiceInvocation, Tag, Value, VarAssignment,
};
use crate::semantics::MachineState;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CanonError {
    pub expected: String,
}

impl fmt::Display for CanonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "canonical form: expected {}", self.expected)
    }
}

impl std::error::Error for CanonError {}

struct Scan<'a> {
    chars: Peekable<Chars<'a>>,
}

type R<T> = Result<T, CanonError>;

impl<'a> Scan<'a> {
    fn new(text: &'a str) -> Self {
        Scan {
            chars: text.chars().peekable(),
        }
    }

    fn err<T>(&mut self, expected: &str) -> R<T> {
        Err(CanonError {
            expected: expected.to_string(),
        })
    }

    fn eat(&mut self, c: char) -> R<()> {
        if self.chars.peek() == Some(&c) {
            self.chars.next();
            Ok(())
        } else {
            self.err(&format!("`{}`", c))
        }
    }

    fn eat_str(&mut self, s: &str) -> R<()> {
        for c in s.chars() {
            self.eat(c)?;
        }
        Ok(())
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.chars.peek() == Some(&c)
    }

    fn ident(&mut self) -> R<String> {
        let mut name = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_alphanumeric() || c == '_' {
                name.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        if name.is_empty() {
            self.err("a name")
        } else {
            Ok(name)
        }
    }

    fn integer(&mut self) -> R<i64> {
        let neg = if self.peek_is('-') {
            self.chars.next();
            true
        } else {
            false
        };
        let mut digits = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                digits.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        if digits.is_empty() {
            return self.err("digits");
        }
        let n: i64 = digits.parse().map_err(|_| CanonError {
            expected: "an integer".into(),
        })?;
        Ok(if neg { -n } else { n })
    }

    fn value(&mut self) -> R<Value> {
        match self.chars.peek().copied() {
            Some(c) if c.is_ascii_digit() || c == '-' => Ok(Value::Int(self.integer()?)),
            Some('@') => {
                self.chars.next();
                Ok(Value::Obj(ObjectId::new(self.ident()?)))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let name = self.ident()?;
                match name.as_str() {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    _ => Ok(Value::Enum(name)),
                }
            }
            _ => self.err("a value"),
        }
    }

    fn assignment(&mut self) -> R<VarAssignment> {
        self.eat('{')?;
        let mut out = VarAssignment::new();
        if !self.peek_is('}') {
            loop {
                let name = self.ident()?;
                self.eat(':')?;
                let value = self.value()?;
                out.insert(name, value);
                if !self.peek_is(',') {
                    break;
                }
                self.chars.next();
            }
        }
        self.eat('}')?;
        Ok(out)
    }

    fn tag(&mut self) -> R<Tag> {
        let owner = self.ident()?;
        self.eat(':')?;
        let index = self.integer()?;
        if index < 0 {
            return self.err("a non-negative tag index");
        }
        Ok(Tag::new(ObjectId::new(owner), index as u32))
    }

    fn name_set(&mut self) -> R<BTreeSet<String>> {
        self.eat('{')?;
        let mut out = BTreeSet::new();
        if !self.peek_is('}') {
            loop {
                out.insert(self.ident()?);
                if !self.peek_is(',') {
                    break;
                }
                self.chars.next();
            }
        }
        self.eat('}')?;
        Ok(out)
    }

    fn frame(&mut self) -> R<ServiceInvocation> {
        self.eat_str("(env=")?;
        let env = self.assignment()?;
        self.eat_str(" args=")?;
        let arg_names = self.name_set()?;
        self.eat_str(" pc=")?;
        let service = self.ident()?;
        self.eat('.')?;
        let state = self.ident()?;
        self.eat_str(" caller=")?;
        let caller = ObjectId::new(self.ident()?);
        self.eat(' ')?;
        let concurrent = match self.ident()?.as_str() {
            "conc" => true,
            "seq" => false,
            _ => return self.err("`seq` or `conc`"),
        };
        self.eat(')')?;
        Ok(ServiceInvocation {
            env,
            arg_names,
            pc: ProgramCounter::new(service, state),
            caller,
            concurrent,
        })
    }

    fn stack(&mut self) -> R<InvocationStack> {
        self.eat('[')?;
        let mut stack = InvocationStack::empty();
        if !self.peek_is(']') {
            loop {
                stack = stack.push(self.frame()?);
                if !self.peek_is(';') {
                    break;
                }
                self.chars.next();
            }
        }
        self.eat(']')?;
        Ok(stack)
    }

    fn object_state(&mut self) -> R<ObjectState> {
        self.eat_str("at=")?;
        let attrs = self.assignment()?;
        self.eat_str(" st={")?;
        let mut stacks = Vec::new();
        if !self.peek_is('}') {
            loop {
                let tag = self.tag()?;
                self.eat('=')?;
                let stack = self.stack()?;
                stacks.push((tag, stack));
                if !self.peek_is(',') {
                    break;
                }
                self.chars.next();
            }
        }
        self.eat('}')?;
        self.eat_str(" pt={")?;
        let mut pool = BTreeSet::new();
        if !self.peek_is('}') {
            loop {
                pool.insert(self.tag()?);
                if !self.peek_is(',') {
                    break;
                }
                self.chars.next();
            }
        }
        self.eat('}')?;
        let mut state = ObjectState::new(attrs, pool);
        for (tag, stack) in stacks {
            state.set_stack(tag, stack);
        }
        Ok(state)
    }

    fn message(&mut self, snd: ObjectId, rec: ObjectId) -> R<Message> {
        let first = self.ident()?;
        let (kind, name) = match first.as_str() {
            "seq" => {
                self.eat(' ')?;
                (MessageKind::SequCall, self.ident()?)
            }
            "conc" => {
                self.eat(' ')?;
                (MessageKind::ConcCall, self.ident()?)
            }
            "ret" => (MessageKind::Ret, first),
            _ => return self.err("`seq`, `conc`, or `ret`"),
        };
        self.eat('[')?;
        let tag = self.tag()?;
        self.eat(']')?;
        self.eat('(')?;
        let mut args = Vec::new();
        if !self.peek_is(')') {
            loop {
                args.push(self.value()?);
                if !self.peek_is(',') {
                    break;
                }
                self.chars.next();
            }
        }
        self.eat(')')?;
        Ok(match kind {
            MessageKind::SequCall => Message::sequ_call(snd, rec, tag, name, args),
            MessageKind::ConcCall => Message::conc_call(snd, rec, tag, name, args),
            MessageKind::Ret => Message::ret(snd, rec, tag, args),
        })
    }

    fn end(&mut self) -> R<()> {
        if self.chars.peek().is_none() {
            Ok(())
        } else {
            self.err("end of the field")
        }
    }
}

pub fn parse_object_state(text: &str) -> R<ObjectState> {
    let mut s = Scan::new(text);
    let state = s.object_state()?;
    s.end()?;
    Ok(state)
}

/// Parse a machine-state digest. `ERROR` denotes the trap state; its
/// contents are unknowable by design.
pub fn parse_machine_state(id: &ObjectId, text: &str) -> R<MachineState> {
    if text == "ERROR" {
        let mut m = MachineState::new(
            id.clone(),
            ObjectState::new(VarAssignment::new(), BTreeSet::new()),
        );
        m.poisoned = true;
        return Ok(m);
    }
    Ok(MachineState::new(id.clone(), parse_object_state(text)?))
}

/// Parse a message body as printed by its `Display`; endpoints come from
/// the surrounding trace field.
pub fn parse_message(snd: &ObjectId, rec: &ObjectId, text: &str) -> R<Message> {
    let mut s = Scan::new(text);
    let m = s.message(snd.clone(), rec.clone())?;
    s.end()?;
    Ok(m)
}

pub fn parse_assignment(text: &str) -> R<VarAssignment> {
    let mut s = Scan::new(text);
    let a = s.assignment()?;
    s.end()?;
    Ok(a)
}

pub fn parse_value(text: &str) -> R<Value> {
    let mut s = Scan::new(text);
    let v = s.value()?;
    s.end()?;
    Ok(v)
}

pub fn parse_tag(text: &str) -> R<Tag> {
    let mut s = Scan::new(text);
    let t = s.tag()?;
    s.end()?;
    Ok(t)
}
