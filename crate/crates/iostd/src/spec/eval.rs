use thiserror::Error;

use crate::kernel::{Message, Value, VarAssignment};

use super::ast::{BinOp, Expr, Pattern, Predicate};

/// Reserved name bound to the sender of the matched message.
pub const SENDER_NAME: &str = "sender";

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("integer operation out of range: {0}")]
    DomainOverflow(String),
    #[error("pattern `{pattern}` matches message `{message}` by name but expects {expected} arguments, found {found}")]
    ArityMismatch {
        pattern: String,
        message: String,
        expected: usize,
        found: usize,
    },
}

/// Environment key under which the primed copy of `name` is bound.
pub fn primed_key(name: &str) -> String {
    format!("{}'", name)
}

/// Evaluate an expression under an environment that binds every free
/// variable (primed copies included). Integer arithmetic is exact.
pub fn eval_expr(e: &Expr, env: &VarAssignment) -> Result<Value, EvalError> {
    match e {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(name) => env
            .lookup(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
        Expr::Primed(name) => {
            let key = primed_key(name);
            env.lookup(&key)
                .cloned()
                .ok_or(EvalError::UnboundVariable(key))
        }
        Expr::Not(inner) => match eval_expr(inner, env)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            v => Err(EvalError::TypeMismatch(format!(
                "! applied to {}",
                v.kind_name()
            ))),
        },
        Expr::Bin(op, l, r) => {
            let lv = eval_expr(l, env)?;
            let rv = eval_expr(r, env)?;
            apply(*op, lv, rv)
        }
    }
}

fn apply(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    match op {
        Add | Sub | Mul => {
            let (a, b) = int_pair(op, &l, &r)?;
            let result = match op {
                Add => a.checked_add(b),
                Sub => a.checked_sub(b),
                Mul => a.checked_mul(b),
                _ => unreachable!(),
            };
            result
                .map(Value::Int)
                .ok_or_else(|| EvalError::DomainOverflow(format!("{} {} {}", a, op.symbol(), b)))
        }
        Lt | Le | Gt | Ge => {
            let (a, b) = int_pair(op, &l, &r)?;
            Ok(Value::Bool(match op {
                Lt => a < b,
                Le => a <= b,
                Gt => a > b,
                Ge => a >= b,
                _ => unreachable!(),
            }))
        }
        Eq | Ne => {
            if l.kind_name() != r.kind_name() {
                return Err(EvalError::TypeMismatch(format!(
                    "{} {} {}",
                    l.kind_name(),
                    op.symbol(),
                    r.kind_name()
                )));
            }
            Ok(Value::Bool((l == r) == (op == Eq)))
        }
        And | Or => match (l, r) {
            (Value::Bool(a), Value::Bool(b)) => {
                Ok(Value::Bool(if op == And { a && b } else { a || b }))
            }
            (a, b) => Err(EvalError::TypeMismatch(format!(
                "{} {} {}",
                a.kind_name(),
                op.symbol(),
                b.kind_name()
            ))),
        },
    }
}

fn int_pair(op: BinOp, l: &Value, r: &Value) -> Result<(i64, i64), EvalError> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Ok((*a, *b)),
        _ => Err(EvalError::TypeMismatch(format!(
            "{} {} {}",
            l.kind_name(),
            op.symbol(),
            r.kind_name()
        ))),
    }
}

/// Evaluate a boolean-valued expression.
pub fn eval_pred(p: &Predicate, env: &VarAssignment) -> Result<bool, EvalError> {
    match eval_expr(p, env)? {
        Value::Bool(b) => Ok(b),
        v => Err(EvalError::TypeMismatch(format!(
            "predicate evaluated to {}",
            v.kind_name()
        ))),
    }
}

/// Match a message against a pattern.
///
/// Returns `None` when the message name differs. On a name match the
/// arities must agree (a mismatch is a description bug, not a failed
/// match); the binding then maps each binder to the corresponding
/// positional argument, the declared sender binder (if any) and the
/// reserved name [`SENDER_NAME`] to the sender.
pub fn match_pattern(p: &Pattern, m: &Message) -> Result<Option<VarAssignment>, EvalError> {
    if p.name != m.name {
        return Ok(None);
    }
    if p.binders.len() != m.arity() {
        return Err(EvalError::ArityMismatch {
            pattern: p.name.clone(),
            message: m.name.clone(),
            expected: p.binders.len(),
            found: m.arity(),
        });
    }
    let mut binding = VarAssignment::new();
    for (binder, value) in p.binders.iter().zip(m.positional_args()) {
        binding.insert(binder.name.clone(), value.clone());
    }
    if let Some(sender) = &p.sender {
        binding.insert(sender.clone(), Value::Obj(m.snd.clone()));
    }
    binding.insert(SENDER_NAME, Value::Obj(m.snd.clone()));
    Ok(Some(binding))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{ObjectId, Tag};
    use crate::spec::ast::Binder;

    fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }

    fn int(n: i64) -> Expr {
        Expr::Lit(Value::Int(n))
    }

    fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    #[test]
    fn literal_evaluates_to_itself() {
        assert_eq!(eval_expr(&int(5), &VarAssignment::new()), Ok(Value::Int(5)));
    }

    #[test]
    fn addition_under_bindings() {
        let env = VarAssignment::new()
            .with("bal", Value::Int(7))
            .with("a", Value::Int(3));
        let e = bin(BinOp::Add, var("bal"), var("a"));
        assert_eq!(eval_expr(&e, &env), Ok(Value::Int(10)));
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let e = bin(BinOp::Add, var("x"), int(1));
        assert_eq!(
            eval_expr(&e, &VarAssignment::new()),
            Err(EvalError::UnboundVariable("x".into()))
        );
    }

    #[test]
    fn comparison_predicate() {
        let env = VarAssignment::new()
            .with("bal", Value::Int(100))
            .with("a", Value::Int(30));
        let p = bin(BinOp::Ge, var("bal"), var("a"));
        assert_eq!(eval_pred(&p, &env), Ok(true));
    }

    #[test]
    fn postcondition_relating_primed_and_unprimed() {
        let env = VarAssignment::new()
            .with("bal", Value::Int(50))
            .with("a", Value::Int(20))
            .with(primed_key("bal"), Value::Int(30));
        let p = bin(
            BinOp::Eq,
            Expr::Primed("bal".into()),
            bin(BinOp::Sub, var("bal"), var("a")),
        );
        assert_eq!(eval_pred(&p, &env), Ok(true));
    }

    #[test]
    fn contradiction_is_false_under_any_env() {
        let env = VarAssignment::new().with("open", Value::Bool(true));
        let p = bin(BinOp::And, var("open"), Expr::Not(Box::new(var("open"))));
        assert_eq!(eval_pred(&p, &env), Ok(false));
    }

    fn pattern(name: &str, binders: &[&str]) -> Pattern {
        Pattern {
            name: name.into(),
            binders: binders
                .iter()
                .map(|b| Binder {
                    name: (*b).into(),
                    domain: None,
                })
                .collect(),
            sender: None,
        }
    }

    fn msg(name: &str, args: Vec<Value>) -> Message {
        Message::sequ_call(
            ObjectId::new("c1"),
            ObjectId::new("acc"),
            Tag::new(ObjectId::new("env"), 0),
            name,
            args,
        )
    }

    #[test]
    fn match_binds_arguments_and_sender() {
        let binding = match_pattern(
            &pattern("withdraw", &["a"]),
            &msg("withdraw", vec![Value::Int(50)]),
        )
        .unwrap()
        .unwrap();
        assert_eq!(binding.lookup("a"), Some(&Value::Int(50)));
        assert_eq!(
            binding.lookup(SENDER_NAME),
            Some(&Value::Obj(ObjectId::new("c1")))
        );
    }

    #[test]
    fn different_name_is_no_match() {
        let r = match_pattern(
            &pattern("withdraw", &["a"]),
            &msg("deposit", vec![Value::Int(50)]),
        );
        assert_eq!(r, Ok(None));
    }

    #[test]
    fn same_name_wrong_arity_is_an_error() {
        let r = match_pattern(&pattern("withdraw", &["a"]), &msg("withdraw", vec![]));
        assert!(matches!(r, Err(EvalError::ArityMismatch { .. })));
    }

    #[test]
    fn rematching_is_stable() {
        let p = Pattern {
            name: "transfer".into(),
            binders: vec![
                Binder {
                    name: "a".into(),
                    domain: None,
                },
                Binder {
                    name: "dst".into(),
                    domain: None,
                },
            ],
            sender: Some("c".into()),
        };
        let m = msg(
            "transfer",
            vec![Value::Int(2), Value::Obj(ObjectId::new("acc2"))],
        );
        let b1 = match_pattern(&p, &m).unwrap().unwrap();
        let b2 = match_pattern(&p, &m).unwrap().unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.lookup("c"), Some(&Value::Obj(ObjectId::new("c1"))));
    }
}
