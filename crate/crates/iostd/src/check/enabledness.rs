//! Input-enabledness gaps: the regions of attribute-and-binding space in
//! which a message shape arriving at a diagram state matches no enabled
//! transition and execution would fall to the chaos policy.

use std::collections::BTreeSet;

use crate::spec::domains::{assignments, attribute_decls};
use crate::spec::{eval_pred, BehaviorDescription, Domain, OutputKind, ServiceStd};

use super::finding::{sort_findings, Finding};

pub const ENABLEDNESS_GAP: &str = "enabledness-gap";

/// Message shapes that can arrive while an execution sits at `state`:
/// the patterns of the state's own transitions, the service's call when
/// the state is initial, and a return when some suspension targets it.
fn shapes_at(svc: &ServiceStd, state: &str) -> BTreeSet<String> {
    let mut shapes: BTreeSet<String> = svc
        .transitions
        .iter()
        .filter(|t| t.from == state)
        .map(|t| t.pattern.name.clone())
        .collect();
    if svc.is_initial(state) {
        shapes.insert(svc.name.clone());
    }
    let suspends_here = svc.transitions.iter().any(|t| {
        t.to == state
            && t.outputs
                .last()
                .map(|o| o.kind == OutputKind::Seq)
                .unwrap_or(false)
    });
    if suspends_here {
        shapes.insert(crate::kernel::RET_NAME.to_string());
    }
    shapes
}

/// Argument domains of a shape at a state: a called service's declared
/// parameters, or the inline domains of a return pattern leaving the
/// state (no-argument return when none declares domains).
fn shape_decls(
    beh: &BehaviorDescription,
    svc: &ServiceStd,
    state: &str,
    shape: &str,
) -> Vec<(String, Domain)> {
    if shape != crate::kernel::RET_NAME {
        return beh
            .service(shape)
            .map(|target| {
                target
                    .params
                    .iter()
                    .map(|p| (p.name.clone(), p.domain.clone()))
                    .collect()
            })
            .unwrap_or_default();
    }
    for t in svc
        .transitions
        .iter()
        .filter(|t| t.from == state && t.pattern.name == shape)
    {
        let decls: Option<Vec<(String, Domain)>> = t
            .pattern
            .binders
            .iter()
            .map(|b| b.domain.clone().map(|d| (b.name.clone(), d)))
            .collect();
        if let Some(decls) = decls {
            return decls;
        }
    }
    Vec::new()
}

/// For every (diagram state, matchable message shape), report the region
/// where no transition from the state is enabled, with a concrete first
/// witness. States whose label is unsatisfiable are a validation finding
/// already and are suppressed here.
pub fn enabledness_report(beh: &BehaviorDescription) -> Vec<Finding> {
    let attr_decls = attribute_decls(beh);
    let mut findings = Vec::new();

    for svc in &beh.services {
        for state in &svc.states {
            let satisfiable = assignments(&attr_decls)
                .any(|attrs| eval_pred(&state.label, &attrs).unwrap_or(false));
            if !satisfiable {
                continue;
            }
            for shape in shapes_at(svc, &state.name) {
                let decls = shape_decls(beh, svc, &state.name, &shape);
                let candidates: Vec<_> = svc
                    .transitions
                    .iter()
                    .filter(|t| t.from == state.name && t.pattern.name == shape)
                    .collect();

                let mut gap_cells = 0usize;
                let mut total = 0usize;
                let mut witness: Option<String> = None;
                for attrs in assignments(&attr_decls) {
                    for binding in assignments(&decls) {
                        total += 1;
                        let env = attrs.merged(&binding);
                        let enabled = candidates.iter().any(|t| {
                            // Binders of this transition positionally
                            // rebind the canonical parameter names.
                            let mut env = env.clone();
                            for (binder, (name, _)) in t.pattern.binders.iter().zip(decls.iter()) {
                                if let Some(v) = binding.lookup(name) {
                                    env.insert(binder.name.clone(), v.clone());
                                }
                            }
                            eval_pred(&state.label, &attrs).unwrap_or(false)
                                && eval_pred(&t.pre, &env).unwrap_or(false)
                        });
                        if !enabled {
                            gap_cells += 1;
                            if witness.is_none() {
                                witness = Some(env.to_string());
                            }
                        }
                    }
                }
                if gap_cells > 0 {
                    findings.push(
                        Finding::error(
                            ENABLEDNESS_GAP,
                            format!("{}.{} {}", svc.name, state.name, shape),
                            format!(
                                "{} of {} attribute/argument cells match no enabled transition",
                                gap_cells, total
                            ),
                        )
                        .with_witness(witness.expect("gap has a witness")),
                    );
                }
            }
        }
    }
    sort_findings(&mut findings);
    findings
}
