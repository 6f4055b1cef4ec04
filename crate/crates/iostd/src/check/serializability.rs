//! Serializability of interleaved service execution: every terminal of
//! the interleaved exploration must have the attribute states of some
//! one-at-a-time execution order of the same injections.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::kernel::{Message, ObjectId};
use crate::semantics::ChaosPolicy;
use crate::sim::{explore, Configuration, Script, SimError};

use super::finding::{sort_findings, Finding};

pub const NON_SERIALIZABLE: &str = "non-serializable";

type AttrView = BTreeMap<ObjectId, String>;

/// Quiescent attribute views of executing `injections` one at a time in
/// the given order, from every intermediate outcome.
fn serial_views(
    cfg: &Configuration,
    order: &[&Message],
    bound: usize,
    policy: ChaosPolicy,
) -> Result<BTreeSet<AttrView>, SimError> {
    let mut configs: Vec<Configuration> = vec![cfg.clone()];
    for injection in order {
        let mut next: Vec<Configuration> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for c in &configs {
            let script = Script::new().inject(0, (*injection).clone());
            let report = explore(c, &script, bound, policy, &[])?;
            for terminal in report.terminals {
                if seen.insert(terminal.config.digest()) {
                    next.push(terminal.config);
                }
            }
        }
        configs = next;
    }
    Ok(configs.into_iter().map(|c| c.attr_view()).collect())
}

fn permutations(items: &[Message]) -> Vec<Vec<&Message>> {
    fn rec(remaining: &mut Vec<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(acc.clone());
            return;
        }
        for i in 0..remaining.len() {
            let x = remaining.remove(i);
            acc.push(x);
            rec(remaining, acc, out);
            acc.pop();
            remaining.insert(i, x);
        }
    }
    let mut orders = Vec::new();
    rec(
        &mut (0..items.len()).collect(),
        &mut Vec::new(),
        &mut orders,
    );
    orders
        .into_iter()
        .map(|order| order.into_iter().map(|i| &items[i]).collect())
        .collect()
}

/// Explore all interleavings of the injections; for each terminal
/// configuration search for an injection order whose sequential
/// execution reaches the same attribute states. Terminals with no such
/// order are findings, each carrying its interleaved trace as witness.
///
/// Precondition: each injected service, run alone from `cfg`, stops
/// quiescently.
pub fn serializability_check(
    cfg: &Configuration,
    injections: &[Message],
    bound: usize,
    policy: ChaosPolicy,
) -> Result<Vec<Finding>, SimError> {
    let mut serial: BTreeSet<AttrView> = BTreeSet::new();
    for order in permutations(injections) {
        serial.extend(serial_views(cfg, &order, bound, policy)?);
    }

    let mut script = Script::new();
    for injection in injections {
        script = script.inject(0, injection.clone());
    }
    let interleaved = explore(cfg, &script, bound, policy, &[])?;

    let mut findings = Vec::new();
    for (index, terminal) in interleaved.terminals.iter().enumerate() {
        let view = terminal.config.attr_view();
        if !serial.contains(&view) {
            let rendered: Vec<String> = view
                .iter()
                .map(|(id, attrs)| format!("{}={}", id, attrs))
                .collect();
            findings.push(
                Finding::error(
                    NON_SERIALIZABLE,
                    format!("terminal {:03}", index),
                    format!(
                        "attribute states {} match no one-at-a-time execution order",
                        rendered.join(" ")
                    ),
                )
                .with_witness(terminal.trace.render()),
            );
        }
    }
    sort_findings(&mut findings);
    Ok(findings)
}
