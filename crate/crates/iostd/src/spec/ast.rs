use std::collections::BTreeSet;

use crate::kernel::{ObjectId, Value};

/// Declared finite domain of an attribute, argument, or local variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Domain {
    Int { lo: i64, hi: i64 },
    Bool,
    Enum(Vec<String>),
    Obj(Vec<ObjectId>),
}

impl Domain {
    /// All values of the domain in canonical enumeration order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Enum(names) => names.iter().cloned().map(Value::Enum).collect(),
            Domain::Obj(ids) => ids.iter().cloned().map(Value::Obj).collect(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Int { lo, hi }, Value::Int(n)) => lo <= n && n <= hi,
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Enum(names), Value::Enum(n)) => names.iter().any(|x| x == n),
            (Domain::Obj(ids), Value::Obj(id)) => ids.contains(id),
            _ => false,
        }
    }

    /// Smallest value; used to initialize locals when an execution starts.
    pub fn min_value(&self) -> Option<Value> {
        self.values().into_iter().next()
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Domain::Int { lo, hi } => lo > hi,
            Domain::Bool => false,
            Domain::Enum(names) => names.is_empty(),
            Domain::Obj(ids) => ids.is_empty(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::Int { .. } => "int",
            Domain::Bool => "bool",
            Domain::Enum(_) => "enum",
            Domain::Obj(_) => "oid",
        }
    }
}

/// A variable declaration: name plus domain.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

/// Expression tree over literals, variables, primed variables, integer
/// arithmetic, comparisons, and boolean connectives.
///
/// A primed occurrence `x'` denotes the successor value of `x` and is
/// meaningful only inside postconditions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Primed(String),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Boolean-valued expression.
pub type Predicate = Expr;

impl Expr {
    pub fn lit_true() -> Expr {
        Expr::Lit(Value::Bool(true))
    }

    pub fn is_lit_true(&self) -> bool {
        matches!(self, Expr::Lit(Value::Bool(true)))
    }

    /// Collect the names occurring primed in this expression.
    pub fn primed_names(&self, acc: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) | Expr::Var(_) => {}
            Expr::Primed(name) => {
                acc.insert(name.clone());
            }
            Expr::Not(e) => e.primed_names(acc),
            Expr::Bin(_, l, r) => {
                l.primed_names(acc);
                r.primed_names(acc);
            }
        }
    }

    /// Collect the names occurring unprimed in this expression.
    pub fn var_names(&self, acc: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) | Expr::Primed(_) => {}
            Expr::Var(name) => {
                acc.insert(name.clone());
            }
            Expr::Not(e) => e.var_names(acc),
            Expr::Bin(_, l, r) => {
                l.var_names(acc);
                r.var_names(acc);
            }
        }
    }
}

/// Binder of a pattern argument. Call-pattern binders take their domain
/// from the named service's parameter declaration; return-pattern binders
/// may declare a domain inline.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Binder {
    pub name: String,
    pub domain: Option<Domain>,
}

/// Input pattern of a transition: a message name, one binder per
/// argument, and an optional binder for the sender.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pattern {
    pub name: String,
    pub binders: Vec<Binder>,
    pub sender: Option<String>,
}

/// Kind marker of an output template.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OutputKind {
    Conc,
    Seq,
    Ret,
}

/// One output of a transition: a target expression, a message name (or
/// `ret`), argument expressions, and the kind.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OutputTemplate {
    pub target: Expr,
    pub message: String,
    pub args: Vec<Expr>,
    pub kind: OutputKind,
}

/// Node of a service diagram. The label characterizes every attribute
/// state the object may assume while an execution is pending here; the
/// exclusion set names services that must not start while it is.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiagramState {
    pub name: String,
    pub label: Predicate,
    pub exclusions: Vec<String>,
}

/// One diagram transition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiagramTransition {
    pub from: String,
    pub pattern: Pattern,
    pub pre: Predicate,
    pub to: String,
    pub outputs: Vec<OutputTemplate>,
    pub post: Predicate,
}

/// Which call disciplines may start the service.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Callable {
    Seq,
    Conc,
    Both,
}

impl Callable {
    pub fn allows_sequential(&self) -> bool {
        matches!(self, Callable::Seq | Callable::Both)
    }

    pub fn allows_concurrent(&self) -> bool {
        matches!(self, Callable::Conc | Callable::Both)
    }
}

/// The diagram of one service.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ServiceStd {
    pub name: String,
    pub callable: Callable,
    pub params: Vec<VarDecl>,
    pub locals: Vec<VarDecl>,
    pub states: Vec<DiagramState>,
    pub initial: Vec<String>,
    pub transitions: Vec<DiagramTransition>,
}

impl ServiceStd {
    pub fn state(&self, name: &str) -> Option<&DiagramState> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn is_initial(&self, name: &str) -> bool {
        self.initial.iter().any(|s| s == name)
    }

    pub fn param(&self, name: &str) -> Option<&VarDecl> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn local(&self, name: &str) -> Option<&VarDecl> {
        self.locals.iter().find(|l| l.name == name)
    }
}

/// Behavior of one class of objects: attribute declarations, the
/// initial-state predicate, and one diagram per service.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BehaviorDescription {
    pub name: String,
    pub attributes: Vec<VarDecl>,
    pub init: Predicate,
    pub services: Vec<ServiceStd>,
}

impl BehaviorDescription {
    pub fn service(&self, name: &str) -> Option<&ServiceStd> {
        self.services.iter().find(|s| s.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&VarDecl> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// All enum constants declared anywhere in the description, used to
    /// resolve bare identifiers into enum literals.
    pub fn enum_constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |d: &Domain| {
            if let Domain::Enum(names) = d {
                out.extend(names.iter().cloned());
            }
        };
        for a in &self.attributes {
            add(&a.domain);
        }
        for s in &self.services {
            for p in &s.params {
                add(&p.domain);
            }
            for l in &s.locals {
                add(&l.domain);
            }
        }
        out
    }
}
