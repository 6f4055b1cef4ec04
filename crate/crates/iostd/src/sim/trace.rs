//! Trace format: line-oriented UTF-8, one event per line, `#`-prefixed
//! header and footer lines, fields separated by ` | `, canonical value
//! printing throughout. Traces parse back losslessly so they can be
//! audited and replayed.

use std::fmt::Write;

use crate::kernel::{Message, ObjectId, Tag};

use super::canon;
use super::SimError;

pub const TRACE_VERSION: &str = "iostd-trace 1";

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TraceEvent {
    /// The environment put a message on its channel.
    Inject { message: Message },
    /// A channel head was delivered; `choice` of `of` successors taken.
    Deliver {
        message: Message,
        choice: usize,
        of: usize,
        chaos: bool,
    },
    /// The delivered step emitted a message.
    Emit { message: Message },
    /// Canonical state of an object after a step (and once at the start).
    State { object: ObjectId, digest: String },
    /// The run aborted trying to deliver this message.
    Abort { message: Message, error: String },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StopReason {
    Quiescent,
    StepBudget,
    Aborted,
}

impl StopReason {
    fn label(&self) -> &'static str {
        match self {
            StopReason::Quiescent => "quiescent",
            StopReason::StepBudget => "step-budget",
            StopReason::Aborted => "aborted",
        }
    }
}

/// A complete run record: header metadata, the event list, the stop
/// reason, and warnings about invocations left on stacks at quiescence.
/// Replaying the recorded choices reproduces the trace byte for byte.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    pub corpus_digest: String,
    /// Behavior files behind the run, (path, digest) pairs.
    pub spec_files: Vec<(String, String)>,
    pub scheduler: String,
    pub seed: Option<u64>,
    pub policy: String,
    /// (object id, behavior name), in id order.
    pub objects: Vec<(ObjectId, String)>,
    pub env: ObjectId,
    pub events: Vec<TraceEvent>,
    pub stop: StopReason,
    pub leaked: Vec<(ObjectId, Tag, String)>,
}

impl Trace {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", TRACE_VERSION);
        let _ = writeln!(out, "# corpus-digest: {}", self.corpus_digest);
        for (path, digest) in &self.spec_files {
            let _ = writeln!(out, "# spec: {} {}", path, digest);
        }
        let _ = writeln!(out, "# scheduler: {}", self.scheduler);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed: {}", seed);
        }
        let _ = writeln!(out, "# policy: {}", self.policy);
        for (id, behavior) in &self.objects {
            let _ = writeln!(out, "# object: {} {}", id, behavior);
        }
        let _ = writeln!(out, "# env: {}", self.env);
        for event in &self.events {
            match event {
                TraceEvent::Inject { message } => {
                    let _ = writeln!(
                        out,
                        "inject | {}->{} | {}",
                        message.snd, message.rec, message
                    );
                }
                TraceEvent::Deliver {
                    message,
                    choice,
                    of,
                    chaos,
                } => {
                    let _ = write!(
                        out,
                        "deliver | {}->{} | {} | choice {}/{}",
                        message.snd, message.rec, message, choice, of
                    );
                    let _ = writeln!(out, "{}", if *chaos { " | chaos" } else { "" });
                }
                TraceEvent::Emit { message } => {
                    let _ = writeln!(out, "emit | {}->{} | {}", message.snd, message.rec, message);
                }
                TraceEvent::State { object, digest } => {
                    let _ = writeln!(out, "state | {} | {}", object, digest);
                }
                TraceEvent::Abort { message, error } => {
                    let _ = writeln!(
                        out,
                        "abort | {}->{} | {} | {}",
                        message.snd, message.rec, message, error
                    );
                }
            }
        }
        let _ = writeln!(out, "# stop: {}", self.stop.label());
        for (id, tag, pc) in &self.leaked {
            let _ = writeln!(out, "# leaked: {} {} {}", id, tag, pc);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trace, SimError> {
        let bad = |line: usize, reason: &str| SimError::TraceParse {
            line: line + 1,
            reason: reason.to_string(),
        };
        let mut trace = Trace {
            corpus_digest: String::new(),
            spec_files: Vec::new(),
            scheduler: String::new(),
            seed: None,
            policy: String::new(),
            objects: Vec::new(),
            env: ObjectId::new("env"),
            events: Vec::new(),
            stop: StopReason::Quiescent,
            leaked: Vec::new(),
        };
        let mut saw_version = false;
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                if rest == TRACE_VERSION {
                    saw_version = true;
                    continue;
                }
                if let Some((key, value)) = rest.split_once(": ") {
                    match key {
                        "corpus-digest" => trace.corpus_digest = value.to_string(),
                        "spec" => {
                            let (path, digest) = value
                                .rsplit_once(' ')
                                .ok_or_else(|| bad(lineno, "bad spec header"))?;
                            trace
                                .spec_files
                                .push((path.to_string(), digest.to_string()));
                        }
                        "scheduler" => trace.scheduler = value.to_string(),
                        "seed" => {
                            trace.seed = Some(value.parse().map_err(|_| bad(lineno, "bad seed"))?)
                        }
                        "policy" => trace.policy = value.to_string(),
                        "object" => {
                            let (id, behavior) = value
                                .split_once(' ')
                                .ok_or_else(|| bad(lineno, "bad object header"))?;
                            trace
                                .objects
                                .push((ObjectId::new(id), behavior.to_string()));
                        }
                        "env" => trace.env = ObjectId::new(value),
                        "stop" => {
                            trace.stop = match value {
                                "quiescent" => StopReason::Quiescent,
                                "step-budget" => StopReason::StepBudget,
                                "aborted" => StopReason::Aborted,
                                _ => return Err(bad(lineno, "unknown stop reason")),
                            }
                        }
                        "leaked" => {
                            let mut parts = value.split(' ');
                            let id = parts.next().ok_or_else(|| bad(lineno, "bad leak"))?;
                            let tag = parts.next().ok_or_else(|| bad(lineno, "bad leak"))?;
                            let pc = parts.next().ok_or_else(|| bad(lineno, "bad leak"))?;
                            let tag =
                                canon::parse_tag(tag).map_err(|e| bad(lineno, &e.to_string()))?;
                            trace.leaked.push((ObjectId::new(id), tag, pc.to_string()));
                        }
                        _ => return Err(bad(lineno, "unknown header")),
                    }
                    continue;
                }
                return Err(bad(lineno, "malformed header line"));
            }
            let fields: Vec<&str> = line.split(" | ").collect();
            let endpoints = |field: &str| -> Result<(ObjectId, ObjectId), SimError> {
                let (snd, rec) = field
                    .split_once("->")
                    .ok_or_else(|| bad(lineno, "bad endpoints"))?;
                Ok((ObjectId::new(snd), ObjectId::new(rec)))
            };
            match fields[0] {
                "inject" if fields.len() == 3 => {
                    let (snd, rec) = endpoints(fields[1])?;
                    let message = canon::parse_message(&snd, &rec, fields[2])
                        .map_err(|e| bad(lineno, &e.to_string()))?;
                    trace.events.push(TraceEvent::Inject { message });
                }
                "deliver" if fields.len() == 4 || fields.len() == 5 => {
                    let (snd, rec) = endpoints(fields[1])?;
                    let message = canon::parse_message(&snd, &rec, fields[2])
                        .map_err(|e| bad(lineno, &e.to_string()))?;
                    let choice_field = fields[3]
                        .strip_prefix("choice ")
                        .ok_or_else(|| bad(lineno, "bad choice field"))?;
                    let (choice, of) = choice_field
                        .split_once('/')
                        .ok_or_else(|| bad(lineno, "bad choice field"))?;
                    let chaos = fields.len() == 5 && fields[4] == "chaos";
                    trace.events.push(TraceEvent::Deliver {
                        message,
                        choice: choice.parse().map_err(|_| bad(lineno, "bad choice"))?,
                        of: of.parse().map_err(|_| bad(lineno, "bad choice"))?,
                        chaos,
                    });
                }
                "emit" if fields.len() == 3 => {
                    let (snd, rec) = endpoints(fields[1])?;
                    let message = canon::parse_message(&snd, &rec, fields[2])
                        .map_err(|e| bad(lineno, &e.to_string()))?;
                    trace.events.push(TraceEvent::Emit { message });
                }
                "state" if fields.len() == 3 => {
                    trace.events.push(TraceEvent::State {
                        object: ObjectId::new(fields[1]),
                        digest: fields[2].to_string(),
                    });
                }
                "abort" if fields.len() == 4 => {
                    let (snd, rec) = endpoints(fields[1])?;
                    let message = canon::parse_message(&snd, &rec, fields[2])
                        .map_err(|e| bad(lineno, &e.to_string()))?;
                    trace.events.push(TraceEvent::Abort {
                        message,
                        error: fields[3].to_string(),
                    });
                }
                _ => return Err(bad(lineno, "unknown event line")),
            }
        }
        if !saw_version {
            return Err(SimError::TraceParse {
                line: 1,
                reason: "missing version header".into(),
            });
        }
        Ok(trace)
    }
}

/// FNV-1a digest of file contents, hex form. Identifies the behavior
/// sources a trace was produced from.
pub fn content_digest(text: &str) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{:016x}", hash)
}
