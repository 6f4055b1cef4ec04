use std::collections::BTreeMap;
use std::fmt;

use super::ObjectId;

/// A runtime value. Every value ranges over some finite declared domain,
/// so equality is decidable and domains can be enumerated exhaustively.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Obj(ObjectId),
    Enum(String),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Obj(_) => "oid",
            Value::Enum(_) => "enum",
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_obj(&self) -> Option<&ObjectId> {
        match self {
            Value::Obj(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{}", n),
            Value::Bool(b) => write!(f, "{}", b),
            Value::Obj(id) => write!(f, "@{}", id),
            Value::Enum(name) => f.write_str(name),
        }
    }
}

/// Partial mapping from variable names to values.
///
/// The domain is always finite. Lookup of an unbound name yields `None`;
/// callers that require a binding turn that into an error rather than a
/// default value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct VarAssignment(BTreeMap<String, Value>);

impl VarAssignment {
    pub fn new() -> Self {
        VarAssignment::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Value) {
        self.0.insert(name.into(), value);
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// New assignment where bindings of `over` shadow bindings of `self`.
    pub fn merged(&self, over: &VarAssignment) -> VarAssignment {
        let mut out = self.clone();
        for (k, v) in over.iter() {
            out.insert(k.clone(), v.clone());
        }
        out
    }

    /// True when both assignments bind exactly the same names.
    pub fn same_names(&self, other: &VarAssignment) -> bool {
        self.0.keys().eq(other.0.keys())
    }
}

impl FromIterator<(String, Value)> for VarAssignment {
    fn from_iter<T: IntoIterator<Item = (String, Value)>>(iter: T) -> Self {
        VarAssignment(iter.into_iter().collect())
    }
}

impl fmt::Display for VarAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", k, v)?;
        }
        f.write_str("}")
    }
}
