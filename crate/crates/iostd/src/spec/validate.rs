//! Static well-formedness checks for behavior descriptions, decided by
//! exhaustive enumeration over the declared finite domains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::kernel::Value;

use super::ast::{
    BehaviorDescription, DiagramTransition, Domain, Expr, OutputKind, Predicate, ServiceStd,
};
use super::domains::{assignments, attribute_decls};
use super::eval::{eval_pred, primed_key, SENDER_NAME};

pub const E_UNSAT_STATE: &str = "unsat-state";
pub const E_STATE_OVERLAP: &str = "state-overlap";
pub const E_UNSAT_POST: &str = "unsat-post";
pub const E_MISPLACED_OUTPUT: &str = "misplaced-output";
pub const E_MISSING_RET: &str = "missing-ret";
pub const E_RET_FROM_CONC: &str = "ret-from-conc";
pub const E_UNSAT_INIT: &str = "unsat-init";
pub const E_ARITY: &str = "arity-mismatch";
pub const E_UNKNOWN_NAME: &str = "unknown-name";
pub const E_TYPE: &str = "type-error";
pub const E_DUPLICATE: &str = "duplicate-name";
pub const E_UNKNOWN_STATE: &str = "unknown-state";
pub const E_UNKNOWN_SERVICE: &str = "unknown-service";
pub const E_RESERVED_NAME: &str = "reserved-name";
pub const E_NO_INITIAL: &str = "no-initial";
pub const E_EMPTY_DOMAIN: &str = "empty-domain";
pub const E_PRIMED_CONTEXT: &str = "primed-outside-post";
pub const W_UNKNOWN_OUTPUT: &str = "unknown-output-service";

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "WARN",
            Severity::Error => "ERROR",
        })
    }
}

/// One validation finding. The witness, when present, is a concrete
/// assignment that re-checks under plain predicate evaluation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValidationFinding {
    pub severity: Severity,
    pub code: &'static str,
    /// Service the finding belongs to, empty for behavior-level findings.
    pub service: String,
    /// Location inside the service: a state name, `trans[i]`, or `init`.
    pub location: String,
    pub message: String,
    pub witness: Option<String>,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = if self.service.is_empty() {
            self.location.clone()
        } else {
            format!("{}.{}", self.service, self.location)
        };
        write!(
            f,
            "{} {} {} {}",
            self.severity, self.code, loc, self.message
        )?;
        if let Some(w) = &self.witness {
            write!(f, " witness={}", w)?;
        }
        Ok(())
    }
}

/// Validation outcome: an ordered list of findings.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    pub findings: Vec<ValidationFinding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.error_count() == 0
    }

    pub fn error_count(&self) -> usize {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
            .count()
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    /// Stable rendering: one line per finding, ordered by service,
    /// location, then code.
    pub fn render_lines(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out
    }

    fn push(&mut self, finding: ValidationFinding) {
        self.findings.push(finding);
    }

    fn sort(&mut self) {
        self.findings.sort_by(|a, b| {
            (&a.service, &a.location, a.code).cmp(&(&b.service, &b.location, b.code))
        });
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Int,
    Bool,
    Oid,
    Enum,
    /// A binder without a declared domain (sender binders, domainless
    /// return binders). Usable only as an output argument or target.
    Opaque,
}

impl Kind {
    fn of_domain(d: &Domain) -> Kind {
        match d {
            Domain::Int { .. } => Kind::Int,
            Domain::Bool => Kind::Bool,
            Domain::Enum(_) => Kind::Enum,
            Domain::Obj(_) => Kind::Oid,
        }
    }
}

/// Typing context for the expressions of one transition.
struct TypeCtx {
    /// name -> kind for unprimed occurrences
    vars: BTreeMap<String, Kind>,
    /// names that may occur primed (attributes and locals)
    primed: BTreeMap<String, Kind>,
    /// declared enum constants
    enums: BTreeSet<String>,
    /// names that cannot be enumerated and so may not occur in predicates
    opaque: BTreeSet<String>,
}

enum TypeIssue {
    Unknown(String),
    Mismatch(String),
    PrimedHere(String),
    OpaqueInPredicate(String),
}

fn infer(
    e: &Expr,
    ctx: &TypeCtx,
    allow_primed: bool,
    predicate_position: bool,
) -> Result<Kind, TypeIssue> {
    use super::ast::BinOp::*;
    match e {
        Expr::Lit(Value::Int(_)) => Ok(Kind::Int),
        Expr::Lit(Value::Bool(_)) => Ok(Kind::Bool),
        Expr::Lit(Value::Obj(_)) => Ok(Kind::Oid),
        Expr::Lit(Value::Enum(name)) => {
            if ctx.enums.contains(name) {
                Ok(Kind::Enum)
            } else {
                Err(TypeIssue::Unknown(format!("enum constant `{}`", name)))
            }
        }
        Expr::Var(name) => {
            if let Some(kind) = ctx.vars.get(name) {
                if predicate_position && ctx.opaque.contains(name) {
                    return Err(TypeIssue::OpaqueInPredicate(name.clone()));
                }
                Ok(*kind)
            } else if ctx.enums.contains(name) {
                Ok(Kind::Enum)
            } else {
                Err(TypeIssue::Unknown(format!("variable `{}`", name)))
            }
        }
        Expr::Primed(name) => {
            if !allow_primed {
                return Err(TypeIssue::PrimedHere(name.clone()));
            }
            ctx.primed
                .get(name)
                .copied()
                .ok_or_else(|| TypeIssue::Unknown(format!("primed variable `{}'`", name)))
        }
        Expr::Not(inner) => match infer(inner, ctx, allow_primed, predicate_position)? {
            Kind::Bool => Ok(Kind::Bool),
            k => Err(TypeIssue::Mismatch(format!("! applied to {:?}", k))),
        },
        Expr::Bin(op, l, r) => {
            let lk = infer(l, ctx, allow_primed, predicate_position)?;
            let rk = infer(r, ctx, allow_primed, predicate_position)?;
            match op {
                Add | Sub | Mul | Lt | Le | Gt | Ge => {
                    if lk == Kind::Int && rk == Kind::Int {
                        Ok(if matches!(op, Add | Sub | Mul) {
                            Kind::Int
                        } else {
                            Kind::Bool
                        })
                    } else {
                        Err(TypeIssue::Mismatch(format!(
                            "{:?} {} {:?}",
                            lk,
                            op.symbol(),
                            rk
                        )))
                    }
                }
                Eq | Ne => {
                    if lk == rk && lk != Kind::Opaque {
                        Ok(Kind::Bool)
                    } else {
                        Err(TypeIssue::Mismatch(format!(
                            "{:?} {} {:?}",
                            lk,
                            op.symbol(),
                            rk
                        )))
                    }
                }
                And | Or => {
                    if lk == Kind::Bool && rk == Kind::Bool {
                        Ok(Kind::Bool)
                    } else {
                        Err(TypeIssue::Mismatch(format!(
                            "{:?} {} {:?}",
                            lk,
                            op.symbol(),
                            rk
                        )))
                    }
                }
            }
        }
    }
}

/// The declared domains a transition's guard enumeration ranges over:
/// pattern binders (from the named service's parameters, or inline
/// domains on return binders), the frame environment for transitions
/// that resume a suspended execution (the service's parameters, under
/// every name a start pattern binds them to), and the service's locals.
fn binding_decls(
    beh: &BehaviorDescription,
    svc: &ServiceStd,
    t: &DiagramTransition,
) -> Vec<(String, Domain)> {
    let mut decls: Vec<(String, Domain)> = Vec::new();
    fn add(decls: &mut Vec<(String, Domain)>, name: &str, domain: Domain) {
        if !decls.iter().any(|(n, _)| n == name) {
            decls.push((name.to_string(), domain));
        }
    }
    if t.pattern.name != crate::kernel::RET_NAME {
        if let Some(target) = beh.service(&t.pattern.name) {
            for (binder, param) in t.pattern.binders.iter().zip(&target.params) {
                add(&mut decls, &binder.name, param.domain.clone());
            }
        }
    }
    for binder in &t.pattern.binders {
        if let Some(domain) = &binder.domain {
            add(&mut decls, &binder.name, domain.clone());
        }
    }
    if t.pattern.name == crate::kernel::RET_NAME || !svc.is_initial(&t.from) {
        for param in &svc.params {
            add(&mut decls, &param.name, param.domain.clone());
        }
        for start in svc
            .transitions
            .iter()
            .filter(|s| s.pattern.name == svc.name)
        {
            for (binder, param) in start.pattern.binders.iter().zip(&svc.params) {
                add(&mut decls, &binder.name, param.domain.clone());
            }
        }
    }
    for local in &svc.locals {
        add(&mut decls, &local.name, local.domain.clone());
    }
    decls
}

/// Exhaustive well-formedness check of a behavior description.
///
/// Findings carry concrete witnesses where one exists; every reported
/// overlap or gap re-checks under plain predicate evaluation.
pub fn validate(beh: &BehaviorDescription) -> ValidationReport {
    let mut report = ValidationReport::default();
    let enums = beh.enum_constants();
    let reserved = ["self", SENDER_NAME, crate::kernel::RET_NAME];

    // Declarations: duplicates, reserved names, empty domains.
    let mut seen_attr = BTreeSet::new();
    for a in &beh.attributes {
        if !seen_attr.insert(a.name.clone()) {
            report.push(behavior_finding(
                E_DUPLICATE,
                "attributes",
                format!("attribute `{}` declared twice", a.name),
            ));
        }
        if reserved.contains(&a.name.as_str()) {
            report.push(behavior_finding(
                E_RESERVED_NAME,
                "attributes",
                format!("`{}` is reserved", a.name),
            ));
        }
        if a.domain.is_empty() {
            report.push(behavior_finding(
                E_EMPTY_DOMAIN,
                "attributes",
                format!("domain of `{}` is empty", a.name),
            ));
        }
    }
    let mut seen_svc = BTreeSet::new();
    for svc in &beh.services {
        if !seen_svc.insert(svc.name.clone()) {
            report.push(behavior_finding(
                E_DUPLICATE,
                "services",
                format!("service `{}` declared twice", svc.name),
            ));
        }
        if reserved.contains(&svc.name.as_str()) {
            report.push(behavior_finding(
                E_RESERVED_NAME,
                "services",
                format!("`{}` is reserved", svc.name),
            ));
        }
    }

    let attr_domains: BTreeMap<&str, &Domain> = beh
        .attributes
        .iter()
        .map(|a| (a.name.as_str(), &a.domain))
        .collect();
    let attr_decls = attribute_decls(beh);

    // Behavior-level typing context for init: attributes only.
    let init_ctx = TypeCtx {
        vars: beh
            .attributes
            .iter()
            .map(|a| (a.name.clone(), Kind::of_domain(&a.domain)))
            .collect(),
        primed: BTreeMap::new(),
        enums: enums.clone(),
        opaque: BTreeSet::new(),
    };
    let init_ok = check_expr(
        &mut report,
        &init_ctx,
        &beh.init,
        Position::Guard,
        "",
        "init",
        Kind::Bool,
    );
    if init_ok && !satisfiable(&beh.init, &attr_decls) {
        report.push(behavior_finding(
            E_UNSAT_INIT,
            "init",
            "initial predicate admits no state".into(),
        ));
    }

    for svc in &beh.services {
        validate_service(&mut report, beh, svc, &enums, &attr_domains, &attr_decls);
    }

    report.sort();
    report
}

fn behavior_finding(code: &'static str, location: &str, message: String) -> ValidationFinding {
    ValidationFinding {
        severity: Severity::Error,
        code,
        service: String::new(),
        location: location.to_string(),
        message,
        witness: None,
    }
}

fn svc_finding(
    svc: &str,
    code: &'static str,
    location: String,
    message: String,
) -> ValidationFinding {
    ValidationFinding {
        severity: Severity::Error,
        code,
        service: svc.to_string(),
        location,
        message,
        witness: None,
    }
}

/// Where an expression sits, which decides whether primed variables are
/// legal and whether non-enumerable binders are.
#[derive(Clone, Copy)]
enum Position {
    /// State labels and preconditions: unprimed, enumerable names only.
    Guard,
    /// Postconditions: primed allowed, enumerable names only.
    Post,
    /// Output targets and arguments: primed allowed, anything printable.
    Output,
}

fn check_expr(
    report: &mut ValidationReport,
    ctx: &TypeCtx,
    e: &Expr,
    position: Position,
    svc: &str,
    location: &str,
    expect: Kind,
) -> bool {
    let (allow_primed, predicate_position) = match position {
        Position::Guard => (false, true),
        Position::Post => (true, true),
        Position::Output => (true, false),
    };
    match infer(e, ctx, allow_primed, predicate_position) {
        Ok(kind) if kind == expect || expect == Kind::Opaque => true,
        Ok(kind) => {
            report.push(svc_finding(
                svc,
                E_TYPE,
                location.to_string(),
                format!("expected {:?}, found {:?}", expect, kind),
            ));
            false
        }
        Err(TypeIssue::Unknown(what)) => {
            report.push(svc_finding(
                svc,
                E_UNKNOWN_NAME,
                location.to_string(),
                format!("{} is not declared", what),
            ));
            false
        }
        Err(TypeIssue::Mismatch(what)) => {
            report.push(svc_finding(svc, E_TYPE, location.to_string(), what));
            false
        }
        Err(TypeIssue::PrimedHere(name)) => {
            report.push(svc_finding(
                svc,
                E_PRIMED_CONTEXT,
                location.to_string(),
                format!("`{}'` outside a postcondition", name),
            ));
            false
        }
        Err(TypeIssue::OpaqueInPredicate(name)) => {
            report.push(svc_finding(
                svc,
                E_TYPE,
                location.to_string(),
                format!(
                    "binder `{}` has no declared domain and cannot appear in a predicate",
                    name
                ),
            ));
            false
        }
    }
}

fn satisfiable(p: &Predicate, decls: &[(String, Domain)]) -> bool {
    assignments(decls).any(|env| eval_pred(p, &env).unwrap_or(false))
}

fn validate_service(
    report: &mut ValidationReport,
    beh: &BehaviorDescription,
    svc: &ServiceStd,
    enums: &BTreeSet<String>,
    _attr_domains: &BTreeMap<&str, &Domain>,
    attr_decls: &[(String, Domain)],
) {
    let name = svc.name.as_str();

    // Structure: duplicate states/params/locals, endpoints, exclusions.
    let mut seen = BTreeSet::new();
    for st in &svc.states {
        if !seen.insert(st.name.clone()) {
            report.push(svc_finding(
                name,
                E_DUPLICATE,
                format!("state {}", st.name),
                "state declared twice".into(),
            ));
        }
        for ex in &st.exclusions {
            if beh.service(ex).is_none() {
                report.push(svc_finding(
                    name,
                    E_UNKNOWN_SERVICE,
                    format!("state {}", st.name),
                    format!("exclusion names undeclared service `{}`", ex),
                ));
            }
        }
    }
    let mut seen_var = BTreeSet::new();
    for decl in svc.params.iter().chain(&svc.locals) {
        if !seen_var.insert(decl.name.clone()) {
            report.push(svc_finding(
                name,
                E_DUPLICATE,
                "params".into(),
                format!("`{}` declared twice", decl.name),
            ));
        }
        if ["self", SENDER_NAME, crate::kernel::RET_NAME].contains(&decl.name.as_str()) {
            report.push(svc_finding(
                name,
                E_RESERVED_NAME,
                "params".into(),
                format!("`{}` is reserved", decl.name),
            ));
        }
        if decl.domain.is_empty() {
            report.push(svc_finding(
                name,
                E_EMPTY_DOMAIN,
                "params".into(),
                format!("domain of `{}` is empty", decl.name),
            ));
        }
    }
    if svc.initial.is_empty() {
        report.push(svc_finding(
            name,
            E_NO_INITIAL,
            "initial".into(),
            "no initial state".into(),
        ));
    }
    for init in &svc.initial {
        if svc.state(init).is_none() {
            report.push(svc_finding(
                name,
                E_UNKNOWN_STATE,
                "initial".into(),
                format!("`{}` is not a state", init),
            ));
        }
    }

    // Typing context shared by this service's transitions: attributes,
    // parameters, locals, and every binder name used by any pattern of
    // the service (a resumed execution carries its start binding).
    let mut vars: BTreeMap<String, Kind> = beh
        .attributes
        .iter()
        .map(|a| (a.name.clone(), Kind::of_domain(&a.domain)))
        .collect();
    vars.insert("self".to_string(), Kind::Oid);
    vars.insert(SENDER_NAME.to_string(), Kind::Oid);
    let mut opaque = BTreeSet::new();
    opaque.insert(SENDER_NAME.to_string());
    for decl in svc.params.iter().chain(&svc.locals) {
        vars.insert(decl.name.clone(), Kind::of_domain(&decl.domain));
    }
    for t in &svc.transitions {
        let target = beh.service(&t.pattern.name);
        for (i, binder) in t.pattern.binders.iter().enumerate() {
            let kind = if let Some(domain) = &binder.domain {
                Kind::of_domain(domain)
            } else if let Some(target) = target {
                target
                    .params
                    .get(i)
                    .map(|p| Kind::of_domain(&p.domain))
                    .unwrap_or(Kind::Opaque)
            } else {
                Kind::Opaque
            };
            if kind == Kind::Opaque {
                opaque.insert(binder.name.clone());
            }
            vars.entry(binder.name.clone()).or_insert(kind);
        }
        if let Some(sender) = &t.pattern.sender {
            vars.entry(sender.clone()).or_insert(Kind::Oid);
            opaque.insert(sender.clone());
        }
    }
    let mut primed: BTreeMap<String, Kind> = beh
        .attributes
        .iter()
        .map(|a| (a.name.clone(), Kind::of_domain(&a.domain)))
        .collect();
    for l in &svc.locals {
        primed.insert(l.name.clone(), Kind::of_domain(&l.domain));
    }
    let ctx = TypeCtx {
        vars,
        primed,
        enums: enums.clone(),
        opaque,
    };

    // State labels: typed over attributes alone, satisfiable, pairwise
    // disjoint within this service.
    let attr_ctx = TypeCtx {
        vars: beh
            .attributes
            .iter()
            .map(|a| (a.name.clone(), Kind::of_domain(&a.domain)))
            .collect(),
        primed: BTreeMap::new(),
        enums: enums.clone(),
        opaque: BTreeSet::new(),
    };
    let mut label_ok: BTreeMap<&str, bool> = BTreeMap::new();
    for st in &svc.states {
        let ok = check_expr(
            report,
            &attr_ctx,
            &st.label,
            Position::Guard,
            name,
            &format!("state {}", st.name),
            Kind::Bool,
        );
        label_ok.insert(st.name.as_str(), ok);
        if ok && !satisfiable(&st.label, attr_decls) {
            report.push(svc_finding(
                name,
                E_UNSAT_STATE,
                format!("state {}", st.name),
                "state predicate is unsatisfiable".into(),
            ));
        }
    }
    for (i, a) in svc.states.iter().enumerate() {
        for b in svc.states.iter().skip(i + 1) {
            if !(label_ok[a.name.as_str()] && label_ok[b.name.as_str()]) {
                continue;
            }
            let overlap = assignments(attr_decls).find(|env| {
                eval_pred(&a.label, env).unwrap_or(false)
                    && eval_pred(&b.label, env).unwrap_or(false)
            });
            if let Some(witness) = overlap {
                report.push(ValidationFinding {
                    severity: Severity::Error,
                    code: E_STATE_OVERLAP,
                    service: name.to_string(),
                    location: format!("state {}", a.name),
                    message: format!(
                        "predicates of `{}` and `{}` do not exclude each other",
                        a.name, b.name
                    ),
                    witness: Some(witness.to_string()),
                });
            }
        }
    }

    for (i, t) in svc.transitions.iter().enumerate() {
        validate_transition(report, beh, svc, &ctx, attr_decls, i, t);
    }

    validate_ret_discipline(report, svc);
}

fn validate_transition(
    report: &mut ValidationReport,
    beh: &BehaviorDescription,
    svc: &ServiceStd,
    ctx: &TypeCtx,
    attr_decls: &[(String, Domain)],
    index: usize,
    t: &DiagramTransition,
) {
    let name = svc.name.as_str();
    let location = format!("trans[{}] {}->{}", index, t.from, t.to);

    for endpoint in [&t.from, &t.to] {
        if svc.state(endpoint).is_none() {
            report.push(svc_finding(
                name,
                E_UNKNOWN_STATE,
                location.clone(),
                format!("`{}` is not a state", endpoint),
            ));
            return;
        }
    }

    // Pattern: the named service must exist (or be `ret`) and arities
    // must agree; binder names must be pairwise distinct.
    let mut binder_names = BTreeSet::new();
    for b in &t.pattern.binders {
        if !binder_names.insert(b.name.clone()) {
            report.push(svc_finding(
                name,
                E_DUPLICATE,
                location.clone(),
                format!("binder `{}` bound twice", b.name),
            ));
        }
    }
    if let Some(sender) = &t.pattern.sender {
        if !binder_names.insert(sender.clone()) {
            report.push(svc_finding(
                name,
                E_DUPLICATE,
                location.clone(),
                format!("binder `{}` bound twice", sender),
            ));
        }
    }
    if t.pattern.name != crate::kernel::RET_NAME {
        match beh.service(&t.pattern.name) {
            None => {
                report.push(svc_finding(
                    name,
                    E_UNKNOWN_SERVICE,
                    location.clone(),
                    format!("pattern names undeclared service `{}`", t.pattern.name),
                ));
                return;
            }
            Some(target) => {
                if target.params.len() != t.pattern.binders.len() {
                    report.push(svc_finding(
                        name,
                        E_ARITY,
                        location.clone(),
                        format!(
                            "pattern `{}` has {} binders but the service takes {} arguments",
                            t.pattern.name,
                            t.pattern.binders.len(),
                            target.params.len()
                        ),
                    ));
                    return;
                }
            }
        }
    }

    // Output shape: everything before the last is concurrent; `ret` is
    // only ever the final output and never concurrent.
    for (i, o) in t.outputs.iter().enumerate() {
        let is_last = i + 1 == t.outputs.len();
        let ret_named = o.message == crate::kernel::RET_NAME;
        if ret_named != (o.kind == OutputKind::Ret) {
            report.push(svc_finding(
                name,
                E_MISPLACED_OUTPUT,
                location.clone(),
                "a return output must be named `ret` and vice versa".into(),
            ));
        }
        if !is_last && o.kind != OutputKind::Conc {
            report.push(svc_finding(
                name,
                E_MISPLACED_OUTPUT,
                location.clone(),
                format!(
                    "output {} is not concurrent but only the last output may be",
                    i
                ),
            ));
        }
        if !ret_named && beh.service(&o.message).is_none() {
            report.push(ValidationFinding {
                severity: Severity::Warning,
                code: W_UNKNOWN_OUTPUT,
                service: name.to_string(),
                location: location.clone(),
                message: format!(
                    "output calls `{}`, which this behavior does not declare",
                    o.message
                ),
                witness: None,
            });
        } else if !ret_named {
            let target = beh.service(&o.message).unwrap();
            if target.params.len() != o.args.len() {
                report.push(svc_finding(
                    name,
                    E_ARITY,
                    location.clone(),
                    format!(
                        "output `{}` passes {} arguments but the service takes {}",
                        o.message,
                        o.args.len(),
                        target.params.len()
                    ),
                ));
            }
        }
    }

    // Types: precondition and label contexts forbid primed variables,
    // postconditions and outputs see them.
    let mut ok = check_expr(
        report,
        ctx,
        &t.pre,
        Position::Guard,
        name,
        &location,
        Kind::Bool,
    );
    ok &= check_expr(
        report,
        ctx,
        &t.post,
        Position::Post,
        name,
        &location,
        Kind::Bool,
    );
    for o in &t.outputs {
        ok &= check_expr(
            report,
            ctx,
            &o.target,
            Position::Output,
            name,
            &location,
            Kind::Oid,
        );
        for a in &o.args {
            ok &= check_expr(
                report,
                ctx,
                a,
                Position::Output,
                name,
                &location,
                Kind::Opaque,
            );
        }
    }
    if !ok {
        return;
    }

    // Successor existence: wherever the source label and precondition
    // hold there must be a successor satisfying the postcondition and the
    // target label. Unprimed attributes not mentioned primed are framed.
    let from_label = &svc.state(&t.from).unwrap().label;
    let to_label = &svc.state(&t.to).unwrap().label;
    let binding = binding_decls(beh, svc, t);
    let mut primed_names = BTreeSet::new();
    t.post.primed_names(&mut primed_names);
    let mut primed_decls: Vec<(String, Domain)> = Vec::new();
    for pname in &primed_names {
        let domain = beh
            .attribute(pname)
            .map(|a| a.domain.clone())
            .or_else(|| svc.local(pname).map(|l| l.domain.clone()));
        match domain {
            Some(d) => primed_decls.push((pname.clone(), d)),
            None => {
                report.push(svc_finding(
                    name,
                    E_UNKNOWN_NAME,
                    location.clone(),
                    format!(
                        "primed variable `{}'` is neither an attribute nor a local",
                        pname
                    ),
                ));
                return;
            }
        }
    }

    for attrs in assignments(attr_decls) {
        if !eval_pred(from_label, &attrs).unwrap_or(false) {
            continue;
        }
        for bind in assignments(&binding) {
            let env = attrs.merged(&bind);
            if !eval_pred(&t.pre, &env).unwrap_or(false) {
                continue;
            }
            let found = assignments(&primed_decls).any(|primed| {
                let mut post_env = env.clone();
                for (pname, value) in primed.iter() {
                    post_env.insert(primed_key(pname), value.clone());
                }
                if !eval_pred(&t.post, &post_env).unwrap_or(false) {
                    return false;
                }
                // successor attributes: framed copy plus primed values
                let mut succ = attrs.clone();
                for (pname, value) in primed.iter() {
                    if beh.attribute(pname).is_some() {
                        succ.insert(pname.clone(), value.clone());
                    }
                }
                eval_pred(to_label, &succ).unwrap_or(false)
            });
            if !found {
                report.push(ValidationFinding {
                    severity: Severity::Error,
                    code: E_UNSAT_POST,
                    service: name.to_string(),
                    location: location.clone(),
                    message: "no successor satisfies the postcondition and the target label".into(),
                    witness: Some(env.to_string()),
                });
                return;
            }
        }
    }
}

/// Return-message discipline per service.
///
/// A sequentially callable service must answer every execution with
/// exactly one final return: each start either completes with a return or
/// suspends, and every continuation position eventually reaches a
/// completing transition, with no dead ends and no cycles that postpone
/// the return forever. A service callable only concurrently must never
/// emit a final return.
fn validate_ret_discipline(report: &mut ValidationReport, svc: &ServiceStd) {
    let name = svc.name.as_str();
    let completing = |t: &DiagramTransition| {
        t.outputs
            .last()
            .map(|o| o.kind == OutputKind::Ret)
            .unwrap_or(false)
    };

    if !svc.callable.allows_sequential() {
        for (i, t) in svc.transitions.iter().enumerate() {
            if completing(t) {
                report.push(svc_finding(
                    name,
                    E_RET_FROM_CONC,
                    format!("trans[{}] {}->{}", i, t.from, t.to),
                    "a service callable only concurrently must not emit a final return".into(),
                ));
            }
        }
        return;
    }

    // Start transitions must complete or suspend.
    for (i, t) in svc.transitions.iter().enumerate() {
        let starts = svc.is_initial(&t.from) && t.pattern.name != crate::kernel::RET_NAME;
        if !starts || completing(t) {
            continue;
        }
        let suspends = t
            .outputs
            .last()
            .map(|o| o.kind == OutputKind::Seq)
            .unwrap_or(false);
        if !suspends {
            report.push(svc_finding(
                name,
                E_MISSING_RET,
                format!("trans[{}] {}->{}", i, t.from, t.to),
                "a sequential invocation must answer with a return or suspend; this start does neither".into(),
            ));
        }
    }

    // Continuation positions: targets of non-completing transitions,
    // transitively. Every such position needs a way forward and no
    // non-completing cycle may be reachable.
    let mut continuation: BTreeSet<&str> = BTreeSet::new();
    let mut frontier: Vec<&str> = svc
        .transitions
        .iter()
        .filter(|t| {
            !completing(t) && svc.is_initial(&t.from) && t.pattern.name != crate::kernel::RET_NAME
        })
        .map(|t| t.to.as_str())
        .collect();
    while let Some(state) = frontier.pop() {
        if !continuation.insert(state) {
            continue;
        }
        for t in svc
            .transitions
            .iter()
            .filter(|t| t.from == state && !completing(t))
        {
            frontier.push(t.to.as_str());
        }
    }
    for state in &continuation {
        if !svc.transitions.iter().any(|t| t.from == *state) {
            report.push(svc_finding(
                name,
                E_MISSING_RET,
                format!("state {}", state),
                "a pending execution reaching this state can never answer its caller".into(),
            ));
        }
    }
    // Cycle detection over non-completing edges restricted to the
    // reachable continuation positions.
    let mut visiting: BTreeSet<&str> = BTreeSet::new();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    fn dfs<'a>(
        svc: &'a ServiceStd,
        completing: &impl Fn(&DiagramTransition) -> bool,
        state: &'a str,
        visiting: &mut BTreeSet<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> Option<String> {
        if done.contains(state) {
            return None;
        }
        if !visiting.insert(state) {
            return Some(state.to_string());
        }
        for t in svc
            .transitions
            .iter()
            .filter(|t| t.from == state && !completing(t))
        {
            if let Some(cycle) = dfs(svc, completing, &t.to, visiting, done) {
                return Some(cycle);
            }
        }
        visiting.remove(state);
        done.insert(state);
        None
    }
    for state in &continuation {
        if let Some(at) = dfs(svc, &completing, state, &mut visiting, &mut done) {
            report.push(svc_finding(
                name,
                E_MISSING_RET,
                format!("state {}", at),
                "a pending execution can cycle here without ever answering its caller".into(),
            ));
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::ast::{Binder, Callable, DiagramState, OutputTemplate, Pattern, VarDecl};
    use crate::spec::BinOp;

    fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }

    fn int(n: i64) -> Expr {
        Expr::Lit(Value::Int(n))
    }

    fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    fn echo_service(
        states: Vec<DiagramState>,
        initial: Vec<&str>,
        transitions: Vec<DiagramTransition>,
    ) -> ServiceStd {
        ServiceStd {
            name: "echo".into(),
            callable: Callable::Both,
            params: vec![],
            locals: vec![],
            states,
            initial: initial.into_iter().map(String::from).collect(),
            transitions,
        }
    }

    fn ret_out() -> OutputTemplate {
        OutputTemplate {
            target: Expr::Var(SENDER_NAME.into()),
            message: crate::kernel::RET_NAME.into(),
            args: vec![],
            kind: OutputKind::Ret,
        }
    }

    fn echo_transition() -> DiagramTransition {
        DiagramTransition {
            from: "S".into(),
            pattern: Pattern {
                name: "echo".into(),
                binders: vec![],
                sender: None,
            },
            pre: Expr::lit_true(),
            to: "S".into(),
            outputs: vec![ret_out()],
            post: Expr::lit_true(),
        }
    }

    fn behavior(
        attrs: Vec<VarDecl>,
        init: Expr,
        states: Vec<DiagramState>,
        transitions: Vec<DiagramTransition>,
    ) -> BehaviorDescription {
        BehaviorDescription {
            name: "T".into(),
            attributes: attrs,
            init,
            services: vec![echo_service(states, vec!["S"], transitions)],
        }
    }

    fn x_decl() -> VarDecl {
        VarDecl {
            name: "x".into(),
            domain: Domain::Int { lo: 0, hi: 4 },
        }
    }

    #[test]
    fn disjoint_labels_pass() {
        let beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![
                DiagramState {
                    name: "S".into(),
                    label: bin(BinOp::Ge, var("x"), int(0)),
                    exclusions: vec![],
                },
                DiagramState {
                    name: "N".into(),
                    label: bin(BinOp::Lt, var("x"), int(0)),
                    exclusions: vec![],
                },
            ],
            vec![echo_transition()],
        );
        let report = validate(&beh);
        assert!(
            !report.has_code(E_STATE_OVERLAP),
            "{}",
            report.render_lines()
        );
    }

    #[test]
    fn overlapping_labels_report_the_first_witness() {
        // x >= 0 and x >= 1 over x in 0..4 overlap first at x = 1.
        let beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![
                DiagramState {
                    name: "S".into(),
                    label: bin(BinOp::Ge, var("x"), int(0)),
                    exclusions: vec![],
                },
                DiagramState {
                    name: "T2".into(),
                    label: bin(BinOp::Ge, var("x"), int(1)),
                    exclusions: vec![],
                },
            ],
            vec![echo_transition()],
        );
        let report = validate(&beh);
        let finding = report
            .findings
            .iter()
            .find(|f| f.code == E_STATE_OVERLAP)
            .expect("overlap");
        assert_eq!(finding.witness.as_deref(), Some("{x:1}"));
    }

    #[test]
    fn false_label_is_unsatisfiable() {
        let beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![DiagramState {
                name: "S".into(),
                label: Expr::Lit(Value::Bool(false)),
                exclusions: vec![],
            }],
            vec![echo_transition()],
        );
        assert!(validate(&beh).has_code(E_UNSAT_STATE));
    }

    #[test]
    fn unsatisfiable_init_is_reported() {
        let beh = behavior(
            vec![x_decl()],
            Expr::Lit(Value::Bool(false)),
            vec![DiagramState {
                name: "S".into(),
                label: Expr::lit_true(),
                exclusions: vec![],
            }],
            vec![echo_transition()],
        );
        assert!(validate(&beh).has_code(E_UNSAT_INIT));
    }

    #[test]
    fn post_without_successor_is_reported() {
        // post requires x' = x + 1 which leaves the domain at x = 4.
        let beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![DiagramState {
                name: "S".into(),
                label: Expr::lit_true(),
                exclusions: vec![],
            }],
            vec![DiagramTransition {
                post: bin(
                    BinOp::Eq,
                    Expr::Primed("x".into()),
                    bin(BinOp::Add, var("x"), int(1)),
                ),
                ..echo_transition()
            }],
        );
        let report = validate(&beh);
        let finding = report
            .findings
            .iter()
            .find(|f| f.code == E_UNSAT_POST)
            .expect("unsat post");
        assert!(finding.witness.as_deref().unwrap().contains("x:4"));
    }

    #[test]
    fn misplaced_sequential_output_is_reported() {
        let beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![DiagramState {
                name: "S".into(),
                label: Expr::lit_true(),
                exclusions: vec![],
            }],
            vec![DiagramTransition {
                outputs: vec![ret_out(), ret_out()],
                ..echo_transition()
            }],
        );
        assert!(validate(&beh).has_code(E_MISPLACED_OUTPUT));
    }

    #[test]
    fn start_without_answer_or_suspension_is_missing_ret() {
        let beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![DiagramState {
                name: "S".into(),
                label: Expr::lit_true(),
                exclusions: vec![],
            }],
            vec![DiagramTransition {
                outputs: vec![],
                ..echo_transition()
            }],
        );
        assert!(validate(&beh).has_code(E_MISSING_RET));
    }

    #[test]
    fn conc_only_service_must_not_ret() {
        let mut beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![DiagramState {
                name: "S".into(),
                label: Expr::lit_true(),
                exclusions: vec![],
            }],
            vec![echo_transition()],
        );
        beh.services[0].callable = Callable::Conc;
        assert!(validate(&beh).has_code(E_RET_FROM_CONC));
    }

    #[test]
    fn pattern_arity_must_match_the_service() {
        let mut beh = behavior(
            vec![x_decl()],
            Expr::lit_true(),
            vec![DiagramState {
                name: "S".into(),
                label: Expr::lit_true(),
                exclusions: vec![],
            }],
            vec![DiagramTransition {
                pattern: Pattern {
                    name: "echo".into(),
                    binders: vec![Binder {
                        name: "a".into(),
                        domain: None,
                    }],
                    sender: None,
                },
                ..echo_transition()
            }],
        );
        beh.services[0].params = vec![];
        assert!(validate(&beh).has_code(E_ARITY));
    }
}
