use crate::kernel::Message;
use crate::semantics::{step, ChaosPolicy};

use super::config::Configuration;
use super::scheduler::Scheduler;
use super::script::Script;
use super::trace::{StopReason, Trace, TraceEvent};
use super::SimError;

/// Execute one scheduled run.
///
/// Repeatedly: inject any due script messages, pick a nonempty channel,
/// deliver its head to the receiver, pick one successor, enqueue its
/// outputs in order. Stops at quiescence, at the script's step budget,
/// or on an aborting delivery (stray return, exhausted tag pool), which
/// is recorded as the final event.
pub fn run(
    cfg: &Configuration,
    script: &Script,
    scheduler: &Scheduler,
    policy: ChaosPolicy,
) -> Result<Trace, SimError> {
    if matches!(scheduler, Scheduler::Exhaustive { .. }) {
        return Err(SimError::InvalidScheduler(scheduler.name().to_string()));
    }
    let mut cfg = cfg.clone();
    let mut events: Vec<TraceEvent> = Vec::new();
    for (id, slot) in &cfg.objects {
        events.push(TraceEvent::State {
            object: id.clone(),
            digest: slot.machine.digest(),
        });
    }

    let mut next_injection = 0usize;
    let mut delivered = 0usize;
    let mut counter = 0u64;
    let stop;
    let mut leaked = Vec::new();

    loop {
        while next_injection < script.injections.len()
            && script.injections[next_injection].at_step <= delivered
        {
            let message = script.injections[next_injection].message.clone();
            events.push(TraceEvent::Inject {
                message: message.clone(),
            });
            cfg.enqueue(message);
            next_injection += 1;
        }

        let busy = cfg.busy_channels();
        if busy.is_empty() {
            if next_injection < script.injections.len() {
                // Nothing to deliver before the next directive's step
                // count can be reached: inject it now rather than stall.
                let message = script.injections[next_injection].message.clone();
                events.push(TraceEvent::Inject {
                    message: message.clone(),
                });
                cfg.enqueue(message);
                next_injection += 1;
                continue;
            }
            stop = StopReason::Quiescent;
            leaked = cfg.leaked();
            break;
        }
        if let Some(max) = script.max_steps {
            if delivered >= max {
                stop = StopReason::StepBudget;
                break;
            }
        }

        let channel = &busy[scheduler.choose(counter, busy.len())];
        counter += 1;
        let message = cfg
            .channels
            .get_mut(channel)
            .and_then(|q| q.pop_front())
            .expect("busy channel has a head");

        if message.rec == cfg.env {
            // The environment absorbs everything sent to it.
            events.push(TraceEvent::Deliver {
                message,
                choice: 0,
                of: 1,
                chaos: false,
            });
            delivered += 1;
            continue;
        }

        let Some(slot) = cfg.objects.get(&message.rec) else {
            events.push(TraceEvent::Abort {
                message: message.clone(),
                error: format!("receiver {} is not configured", message.rec),
            });
            stop = StopReason::Aborted;
            break;
        };

        match step(&slot.behavior, &slot.machine, &message, policy) {
            Err(e) => {
                events.push(TraceEvent::Abort {
                    message,
                    error: e.to_string(),
                });
                stop = StopReason::Aborted;
                break;
            }
            Ok(outcomes) => {
                let choice = scheduler.choose(counter, outcomes.len());
                counter += 1;
                let outcome = &outcomes[choice];
                events.push(TraceEvent::Deliver {
                    message: message.clone(),
                    choice,
                    of: outcomes.len(),
                    chaos: outcome.chaos,
                });
                for out in &outcome.out {
                    events.push(TraceEvent::Emit {
                        message: out.clone(),
                    });
                    cfg.enqueue(out.clone());
                }
                let receiver = message.rec.clone();
                let slot = cfg.objects.get_mut(&receiver).expect("checked above");
                slot.machine = outcome.successor.clone();
                events.push(TraceEvent::State {
                    object: receiver,
                    digest: slot.machine.digest(),
                });
                delivered += 1;
            }
        }
    }

    Ok(Trace {
        corpus_digest: cfg.corpus_digest.clone(),
        spec_files: cfg.spec_files.clone(),
        scheduler: scheduler.name().to_string(),
        seed: scheduler.seed(),
        policy: policy.to_string(),
        objects: cfg
            .objects
            .iter()
            .map(|(id, slot)| (id.clone(), slot.behavior.name.clone()))
            .collect(),
        env: cfg.env.clone(),
        events,
        stop,
        leaked,
    })
}

/// Re-execute a trace's recorded choices against an equal starting
/// configuration. Any mismatch between the recording and what the
/// semantics now offers is a divergence, reported with the event index.
/// On success the rebuilt trace equals the input byte for byte.
pub fn replay(trace: &Trace, cfg: &Configuration) -> Result<Trace, SimError> {
    let mut cfg = cfg.clone();
    let diverged = |event: usize, reason: String| SimError::DivergenceAt { event, reason };

    let mut expected_emits: Vec<Message> = Vec::new();
    let mut stop = StopReason::Quiescent;

    for (index, event) in trace.events.iter().enumerate() {
        match event {
            TraceEvent::Inject { message } => {
                cfg.enqueue(message.clone());
            }
            TraceEvent::State { object, digest } => match cfg.objects.get(object) {
                None => return Err(diverged(index, format!("no object {}", object))),
                Some(slot) => {
                    if &slot.machine.digest() != digest {
                        return Err(diverged(
                            index,
                            format!(
                                "state of {} is {}, recorded {}",
                                object, slot.machine, digest
                            ),
                        ));
                    }
                }
            },
            TraceEvent::Emit { message } => {
                if expected_emits.is_empty() {
                    return Err(diverged(index, "unexpected emit".into()));
                }
                let expected = expected_emits.remove(0);
                if &expected != message {
                    return Err(diverged(
                        index,
                        format!("emit {}, recorded {}", expected, message),
                    ));
                }
                cfg.enqueue(message.clone());
            }
            TraceEvent::Deliver {
                message,
                choice,
                of,
                chaos,
            } => {
                if !expected_emits.is_empty() {
                    return Err(diverged(index, "missing emits from previous step".into()));
                }
                take_head(&mut cfg, message, index)?;
                if message.rec == cfg.env {
                    if (*choice, *of) != (0, 1) {
                        return Err(diverged(
                            index,
                            "environment delivery has one choice".into(),
                        ));
                    }
                    continue;
                }
                let slot = cfg
                    .objects
                    .get(&message.rec)
                    .ok_or_else(|| diverged(index, format!("no object {}", message.rec)))?;
                let policy = parse_policy(&trace.policy, index)?;
                let outcomes = step(&slot.behavior, &slot.machine, message, policy)
                    .map_err(|e| diverged(index, e.to_string()))?;
                if outcomes.len() != *of || *choice >= outcomes.len() {
                    return Err(diverged(
                        index,
                        format!(
                            "recorded choice {}/{}, now {} successors",
                            choice,
                            of,
                            outcomes.len()
                        ),
                    ));
                }
                let outcome = &outcomes[*choice];
                if outcome.chaos != *chaos {
                    return Err(diverged(index, "chaos flag differs".into()));
                }
                expected_emits = outcome.out.clone();
                let receiver = message.rec.clone();
                let machine = outcome.successor.clone();
                cfg.objects.get_mut(&receiver).expect("checked").machine = machine;
            }
            TraceEvent::Abort { message, error } => {
                take_head(&mut cfg, message, index)?;
                let slot = cfg
                    .objects
                    .get(&message.rec)
                    .ok_or_else(|| diverged(index, format!("no object {}", message.rec)))?;
                let policy = parse_policy(&trace.policy, index)?;
                match step(&slot.behavior, &slot.machine, message, policy) {
                    Err(e) if &e.to_string() == error => {
                        stop = StopReason::Aborted;
                    }
                    Err(e) => return Err(diverged(index, format!("abort reason changed: {}", e))),
                    Ok(_) => return Err(diverged(index, "recorded abort no longer aborts".into())),
                }
            }
        }
    }
    if !expected_emits.is_empty() {
        return Err(diverged(
            trace.events.len(),
            "missing emits at end of trace".into(),
        ));
    }

    if stop != StopReason::Aborted {
        stop = trace.stop.clone();
        match stop {
            StopReason::Quiescent if !cfg.is_quiescent() => {
                return Err(diverged(
                    trace.events.len(),
                    "recorded quiescence not reached".into(),
                ));
            }
            _ => {}
        }
    }
    let leaked = if stop == StopReason::Quiescent {
        cfg.leaked()
    } else {
        Vec::new()
    };

    Ok(Trace {
        corpus_digest: trace.corpus_digest.clone(),
        spec_files: trace.spec_files.clone(),
        scheduler: trace.scheduler.clone(),
        seed: trace.seed,
        policy: trace.policy.clone(),
        objects: cfg
            .objects
            .iter()
            .map(|(id, slot)| (id.clone(), slot.behavior.name.clone()))
            .collect(),
        env: cfg.env.clone(),
        events: trace.events.clone(),
        stop,
        leaked,
    })
}

fn take_head(cfg: &mut Configuration, message: &Message, index: usize) -> Result<(), SimError> {
    let key = (message.snd.clone(), message.rec.clone());
    let head = cfg.channels.get_mut(&key).and_then(|q| q.pop_front());
    match head {
        Some(head) if &head == message => Ok(()),
        Some(head) => Err(SimError::DivergenceAt {
            event: index,
            reason: format!("channel head is {}, recorded {}", head, message),
        }),
        None => Err(SimError::DivergenceAt {
            event: index,
            reason: format!("channel {}->{} is empty", message.snd, message.rec),
        }),
    }
}

fn parse_policy(name: &str, index: usize) -> Result<ChaosPolicy, SimError> {
    match name {
        "reject" => Ok(ChaosPolicy::Reject),
        "havoc" => Ok(ChaosPolicy::Havoc),
        _ => Err(SimError::DivergenceAt {
            event: index,
            reason: format!("unknown policy {}", name),
        }),
    }
}
