//! Abstract syntax and evaluation for behavior descriptions: expressions,
//! predicates, patterns, diagram states, exclusion sets, and the static
//! well-formedness checks decided by exhaustive enumeration over the
//! declared finite domains.

mod ast;
pub mod domains;
mod eval;
mod validate;

pub use ast::{
    BehaviorDescription, BinOp, Binder, Callable, DiagramState, DiagramTransition, Domain, Expr,
    OutputKind, OutputTemplate, Pattern, Predicate, ServiceStd, VarDecl,
};
pub use eval::{eval_expr, eval_pred, match_pattern, primed_key, EvalError, SENDER_NAME};
pub use validate::{
    validate, Severity, ValidationFinding, ValidationReport, E_ARITY, E_MISPLACED_OUTPUT,
    E_MISSING_RET, E_RET_FROM_CONC, E_STATE_OVERLAP, E_UNSAT_INIT, E_UNSAT_POST, E_UNSAT_STATE,
};
