use std::fmt;

/// Identifier of a live object.
///
/// Identifiers are totally ordered and printable so that schedulers,
/// canonical state prints, and trace diffs stay deterministic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(name: impl Into<String>) -> Self {
        ObjectId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ObjectId {
    fn from(name: &str) -> Self {
        ObjectId::new(name)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Thread identifier.
///
/// A tag is owned by the object that allocated it; pools of different
/// objects are disjoint by construction because the owner is part of the
/// tag. A tag travels with the messages of its thread, across objects.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Tag {
    pub owner: ObjectId,
    pub index: u32,
}

impl Tag {
    pub fn new(owner: impl Into<ObjectId>, index: u32) -> Self {
        Tag {
            owner: owner.into(),
            index,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.owner, self.index)
    }
}
