//! Canonical text form of a behavior description. Printing is
//! deterministic, preserves declaration order, and reparses to an equal
//! syntax tree.

use std::fmt::Write;

use crate::kernel::Value;
use crate::spec::{
    BehaviorDescription, BinOp, Callable, DiagramTransition, Domain, Expr, OutputKind, ServiceStd,
};

/// Render a behavior description in canonical formatting.
pub fn print(beh: &BehaviorDescription) -> String {
    let mut out = String::new();
    let _ = write_behavior(&mut out, beh);
    out
}

fn write_behavior(out: &mut String, beh: &BehaviorDescription) -> std::fmt::Result {
    writeln!(out, "behavior {} {{", beh.name)?;
    if !beh.attributes.is_empty() {
        writeln!(out, "  attributes {{")?;
        for a in &beh.attributes {
            writeln!(out, "    {} : {};", a.name, domain(&a.domain))?;
        }
        writeln!(out, "  }}")?;
    }
    writeln!(out, "  init {{ {} }}", expr(&beh.init))?;
    for svc in &beh.services {
        write_service(out, svc)?;
    }
    writeln!(out, "}}")
}

fn write_service(out: &mut String, svc: &ServiceStd) -> std::fmt::Result {
    let params: Vec<String> = svc
        .params
        .iter()
        .map(|p| format!("{} : {}", p.name, domain(&p.domain)))
        .collect();
    let callable = match svc.callable {
        Callable::Seq => "seq",
        Callable::Conc => "conc",
        Callable::Both => "both",
    };
    writeln!(
        out,
        "  service {}({}) callable {} {{",
        svc.name,
        params.join(", "),
        callable
    )?;
    if !svc.locals.is_empty() {
        writeln!(out, "    locals {{")?;
        for l in &svc.locals {
            writeln!(out, "      {} : {};", l.name, domain(&l.domain))?;
        }
        writeln!(out, "    }}")?;
    }
    writeln!(out, "    states {{")?;
    for st in &svc.states {
        writeln!(out, "      {}: {};", st.name, expr(&st.label))?;
    }
    writeln!(out, "    }}")?;
    writeln!(out, "    initial {};", svc.initial.join(", "))?;
    if svc.states.iter().any(|s| !s.exclusions.is_empty()) {
        writeln!(out, "    exclusions {{")?;
        for st in &svc.states {
            if !st.exclusions.is_empty() {
                writeln!(out, "      {}: [{}];", st.name, st.exclusions.join(", "))?;
            }
        }
        writeln!(out, "    }}")?;
    }
    for t in &svc.transitions {
        write_transition(out, t)?;
    }
    writeln!(out, "  }}")
}

fn write_transition(out: &mut String, t: &DiagramTransition) -> std::fmt::Result {
    writeln!(out, "    trans {} -> {} {{", t.from, t.to)?;
    let binders: Vec<String> = t
        .pattern
        .binders
        .iter()
        .map(|b| match &b.domain {
            Some(d) => format!("{} : {}", b.name, domain(d)),
            None => b.name.clone(),
        })
        .collect();
    write!(out, "      when {}({})", t.pattern.name, binders.join(", "))?;
    if let Some(sender) = &t.pattern.sender {
        write!(out, " from {}", sender)?;
    }
    writeln!(out, ";")?;
    if !t.pre.is_lit_true() {
        writeln!(out, "      pre {};", expr(&t.pre))?;
    }
    if !t.post.is_lit_true() {
        writeln!(out, "      post {};", expr(&t.post))?;
    }
    for o in &t.outputs {
        let args: Vec<String> = o.args.iter().map(expr).collect();
        let marker = match o.kind {
            OutputKind::Conc => "conc",
            OutputKind::Seq | OutputKind::Ret => "seq",
        };
        writeln!(
            out,
            "      out {}.{}({}) {};",
            atom(&o.target),
            o.message,
            args.join(", "),
            marker
        )?;
    }
    writeln!(out, "    }}")
}

fn domain(d: &Domain) -> String {
    match d {
        Domain::Bool => "bool".into(),
        Domain::Int { lo, hi } => format!("int {}..{}", lo, hi),
        Domain::Enum(names) => format!("enum {{{}}}", names.join(", ")),
        Domain::Obj(ids) => {
            let names: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
            format!("oid {{{}}}", names.join(", "))
        }
    }
}

fn precedence(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul => 5,
    }
}

fn expr(e: &Expr) -> String {
    render(e, 0)
}

/// Render as an atom: parenthesized unless it already binds tightest.
fn atom(e: &Expr) -> String {
    match e {
        Expr::Lit(_) | Expr::Var(_) | Expr::Primed(_) => render(e, 0),
        _ => format!("({})", render(e, 0)),
    }
}

fn render(e: &Expr, parent: u8) -> String {
    match e {
        Expr::Lit(Value::Int(n)) => n.to_string(),
        Expr::Lit(Value::Bool(b)) => b.to_string(),
        Expr::Lit(Value::Obj(id)) => format!("@{}", id),
        Expr::Lit(Value::Enum(name)) => name.clone(),
        Expr::Var(name) => name.clone(),
        Expr::Primed(name) => format!("{}'", name),
        Expr::Not(inner) => format!("!{}", render_child(inner, 6, false)),
        Expr::Bin(op, l, r) => {
            let p = precedence(*op);
            let comparison = p == 3;
            let left = render_child(l, p, false);
            // Comparisons do not chain; arithmetic and boolean operators
            // associate to the left.
            let right = render_child(r, p, !comparison);
            let s = format!("{} {} {}", left, op.symbol(), right);
            if p < parent {
                format!("({})", s)
            } else {
                s
            }
        }
    }
}

fn render_child(e: &Expr, parent: u8, is_right_assoc_pos: bool) -> String {
    match e {
        Expr::Bin(op, _, _) => {
            let p = precedence(*op);
            let needs_parens = p < parent || (p == parent && (is_right_assoc_pos || p == 3));
            let s = render(e, 0);
            if needs_parens {
                format!("({})", s)
            } else {
                s
            }
        }
        _ => render(e, parent),
    }
}
