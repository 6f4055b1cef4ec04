use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::kernel::{
    Message, MessageKind, ObjectId, ObjectState, ProgramCounter, ServiceInvocation, StepResult,
    Tag, TagPoolExhausted, Value, VarAssignment,
};
use crate::spec::domains::{assignments, attribute_decls};
use crate::spec::{
    eval_expr, eval_pred, match_pattern, primed_key, BehaviorDescription, DiagramTransition,
    Domain, EvalError, OutputKind, ServiceStd,
};

use super::enumerate::ExplicitMachine;

/// State of one live object under a behavior description: the kernel
/// object state plus the object's identity and the trap flag set when
/// underspecified behavior was reached under the reject policy.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct MachineState {
    pub id: ObjectId,
    pub state: ObjectState,
    pub poisoned: bool,
}

impl MachineState {
    pub fn new(id: ObjectId, state: ObjectState) -> Self {
        MachineState {
            id,
            state,
            poisoned: false,
        }
    }

    /// Canonical printed form, the unit of deduplication and tracing.
    pub fn digest(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poisoned {
            f.write_str("ERROR")
        } else {
            write!(f, "{}", self.state)
        }
    }
}

/// What to do when no diagram transition accepts an input: trap into a
/// distinguished error state, or enumerate every domain-consistent
/// successor with empty output.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChaosPolicy {
    Reject,
    Havoc,
}

impl fmt::Display for ChaosPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChaosPolicy::Reject => "reject",
            ChaosPolicy::Havoc => "havoc",
        })
    }
}

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("initial predicate admits no state")]
    EmptyInitialSet,
    #[error("illegal input: {reason} ({message})")]
    IllegalInput { reason: String, message: String },
    #[error(transparent)]
    TagPoolExhausted(#[from] TagPoolExhausted),
    #[error("state budget exhausted after {explored} states")]
    BudgetExceeded {
        explored: usize,
        partial: Box<ExplicitMachine>,
    },
}

/// Which diagram transition produced an outcome.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct FiredTransition {
    pub service: String,
    pub from: String,
    pub to: String,
    /// False when the step started a new service execution.
    pub resumed: bool,
}

/// One successor of a machine step.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct StepOutcome {
    pub successor: MachineState,
    pub out: Vec<Message>,
    /// True for a policy step taken because no transition accepted the
    /// input; such steps are outside the ordinary stack discipline.
    pub chaos: bool,
    pub fired: Option<FiredTransition>,
}

impl StepOutcome {
    /// The kernel view of this outcome, for the legality audit.
    pub fn as_kernel(&self) -> StepResult {
        StepResult {
            successor: self.successor.state.clone(),
            out: self.out.clone(),
        }
    }
}

/// All machine states satisfying the initial predicate: every attribute
/// assignment over the declared domains that satisfies it, with empty
/// stacks and the full tag pool.
pub fn initial_states(
    beh: &BehaviorDescription,
    id: &ObjectId,
    pool: &BTreeSet<Tag>,
) -> Result<Vec<MachineState>, SemanticsError> {
    let decls = attribute_decls(beh);
    let mut out = Vec::new();
    for attrs in assignments(&decls) {
        if eval_pred(&beh.init, &attrs).unwrap_or(false) {
            out.push(MachineState::new(
                id.clone(),
                ObjectState::new(attrs, pool.clone()),
            ));
        }
    }
    if out.is_empty() {
        return Err(SemanticsError::EmptyInitialSet);
    }
    Ok(out)
}

/// The policy outcomes for an input no transition accepts.
pub(crate) fn chaos_outcomes(
    beh: &BehaviorDescription,
    s: &MachineState,
    policy: ChaosPolicy,
) -> Vec<StepOutcome> {
    match policy {
        ChaosPolicy::Reject => {
            let mut successor = s.clone();
            successor.poisoned = true;
            vec![StepOutcome {
                successor,
                out: Vec::new(),
                chaos: true,
                fired: None,
            }]
        }
        ChaosPolicy::Havoc => {
            let decls = attribute_decls(beh);
            let mut outcomes: Vec<StepOutcome> = assignments(&decls)
                .map(|attrs| {
                    let mut successor = s.clone();
                    successor.state.attrs = attrs;
                    StepOutcome {
                        successor,
                        out: Vec::new(),
                        chaos: true,
                        fired: None,
                    }
                })
                .collect();
            outcomes.sort();
            outcomes
        }
    }
}

/// Whether starting an execution for `message_name` is forbidden by the
/// exclusion set of any invocation pending anywhere on the object.
fn excluded(beh: &BehaviorDescription, state: &ObjectState, message_name: &str) -> bool {
    state.stacks().any(|(_, stack)| {
        stack.frames().any(|frame| {
            beh.service(&frame.pc.service)
                .and_then(|svc| svc.state(&frame.pc.state))
                .is_some_and(|st| st.exclusions.iter().any(|e| e == message_name))
        })
    })
}

/// Everything fixed about one candidate transition before successor
/// enumeration: the service, the transition, the start-or-resume mode,
/// and the binding produced by the pattern match.
struct Candidate<'a> {
    svc: &'a ServiceStd,
    transition: &'a DiagramTransition,
    resume: Option<&'a ServiceInvocation>,
    binding: VarAssignment,
}

enum CandidateError {
    /// The candidate's expressions do not evaluate under this input;
    /// the candidate is dropped (validation keeps honest descriptions
    /// away from this).
    Eval(#[allow(dead_code)] EvalError),
    Pool(TagPoolExhausted),
}

impl From<EvalError> for CandidateError {
    fn from(e: EvalError) -> Self {
        CandidateError::Eval(e)
    }
}

impl From<TagPoolExhausted> for CandidateError {
    fn from(e: TagPoolExhausted) -> Self {
        CandidateError::Pool(e)
    }
}

/// All machine transitions for one input message, per the diagrams.
///
/// The behavior must have passed validation. The returned set is sorted
/// by successor and deduplicated; when no candidate accepts the input the
/// chaos policy decides the outcome, so the set is never empty.
pub fn step(
    beh: &BehaviorDescription,
    s: &MachineState,
    m: &Message,
    policy: ChaosPolicy,
) -> Result<Vec<StepOutcome>, SemanticsError> {
    debug_assert_eq!(m.rec, s.id, "message delivered to the wrong object");

    // A trapped object absorbs everything.
    if s.poisoned {
        return Ok(vec![StepOutcome {
            successor: s.clone(),
            out: Vec::new(),
            chaos: true,
            fired: None,
        }]);
    }

    let stack = s.state.stack(&m.tag);
    match m.kind {
        MessageKind::Ret if stack.is_empty() => {
            return Err(SemanticsError::IllegalInput {
                reason: format!(
                    "return message on tag {} with no suspended invocation",
                    m.tag
                ),
                message: m.to_string(),
            });
        }
        MessageKind::ConcCall if !stack.is_empty() => {
            return Err(SemanticsError::IllegalInput {
                reason: format!("concurrent call reuses tag {} of a running thread", m.tag),
                message: m.to_string(),
            });
        }
        _ => {}
    }

    let mut outcomes: Vec<StepOutcome> = Vec::new();
    let mut candidates: Vec<Candidate> = Vec::new();

    if let Some(frame) = stack.top() {
        // Resume: transitions leaving the pending program counter of the
        // same service whose pattern matches the input.
        if let Some(svc) = beh.service(&frame.pc.service) {
            for t in svc.transitions.iter().filter(|t| t.from == frame.pc.state) {
                if let Ok(Some(binding)) = match_pattern(&t.pattern, m) {
                    candidates.push(Candidate {
                        svc,
                        transition: t,
                        resume: Some(frame),
                        binding,
                    })
                }
            }
        }
    } else if !excluded(beh, &s.state, &m.name) {
        // Start: transitions leaving an initial diagram state of any
        // service whose pattern matches, observing the call discipline
        // the service declares.
        for svc in &beh.services {
            let kind_ok = match m.kind {
                MessageKind::SequCall => svc.callable.allows_sequential(),
                MessageKind::ConcCall => svc.callable.allows_concurrent(),
                MessageKind::Ret => false,
            };
            if !kind_ok {
                continue;
            }
            for t in svc.transitions.iter().filter(|t| svc.is_initial(&t.from)) {
                if let Ok(Some(binding)) = match_pattern(&t.pattern, m) {
                    candidates.push(Candidate {
                        svc,
                        transition: t,
                        resume: None,
                        binding,
                    })
                }
            }
        }
    }

    for candidate in candidates {
        match expand_candidate(beh, s, m, &candidate) {
            Ok(mut results) => outcomes.append(&mut results),
            Err(CandidateError::Eval(_)) => {}
            Err(CandidateError::Pool(e)) => return Err(e.into()),
        }
    }

    if outcomes.is_empty() {
        return Ok(chaos_outcomes(beh, s, policy));
    }
    outcomes.sort();
    outcomes.dedup();
    Ok(outcomes)
}

fn expand_candidate(
    beh: &BehaviorDescription,
    s: &MachineState,
    m: &Message,
    candidate: &Candidate,
) -> Result<Vec<StepOutcome>, CandidateError> {
    let svc = candidate.svc;
    let t = candidate.transition;
    let attrs = &s.state.attrs;

    // Evaluation environment: attributes, self, the resumed frame's
    // variables, then the fresh binding; later entries shadow earlier.
    let mut env = attrs.clone();
    env.insert("self", Value::Obj(s.id.clone()));
    if let Some(frame) = candidate.resume {
        env = env.merged(&frame.env);
    }
    env = env.merged(&candidate.binding);

    // Locals: resumed executions carry them in the frame; fresh ones
    // start each local at its domain minimum.
    let mut locals_base: Vec<(String, Value)> = Vec::new();
    for l in &svc.locals {
        let value = candidate
            .resume
            .and_then(|f| f.env.lookup(&l.name).cloned())
            .or_else(|| l.domain.min_value());
        if let Some(v) = value {
            if !env.contains(&l.name) {
                env.insert(l.name.clone(), v.clone());
            }
            locals_base.push((l.name.clone(), v));
        }
    }

    // Guards: the source label over the current attributes, then the
    // precondition. A pending execution whose label no longer holds has
    // no candidate here and falls to the policy.
    let from_label = &svc
        .state(&t.from)
        .ok_or(EvalError::UnboundVariable(t.from.clone()))?
        .label;
    if !eval_pred(from_label, &env)? || !eval_pred(&t.pre, &env)? {
        return Ok(Vec::new());
    }
    let to_label = &svc
        .state(&t.to)
        .ok_or(EvalError::UnboundVariable(t.to.clone()))?
        .label;

    // Successor enumeration: variables mentioned primed in the
    // postcondition range over their domains; everything else is framed.
    let mut primed = BTreeSet::new();
    t.post.primed_names(&mut primed);
    let mut primed_decls: Vec<(String, Domain)> = Vec::new();
    for name in &primed {
        let domain = beh
            .attribute(name)
            .map(|a| a.domain.clone())
            .or_else(|| svc.local(name).map(|l| l.domain.clone()));
        primed_decls.push((
            name.clone(),
            domain.ok_or(EvalError::UnboundVariable(name.clone()))?,
        ));
    }

    let invoked_concurrently = match candidate.resume {
        Some(frame) => frame.concurrent,
        None => m.kind == MessageKind::ConcCall,
    };
    let stored_caller = match candidate.resume {
        Some(frame) => frame.caller.clone(),
        None => m.snd.clone(),
    };

    let mut outcomes = Vec::new();
    for primed_values in assignments(&primed_decls) {
        let mut post_env = env.clone();
        for (name, value) in primed_values.iter() {
            post_env.insert(primed_key(name), value.clone());
        }
        if !eval_pred(&t.post, &post_env)? {
            continue;
        }
        let mut succ_attrs = attrs.clone();
        for (name, value) in primed_values.iter() {
            if beh.attribute(name).is_some() {
                succ_attrs.insert(name.clone(), value.clone());
            }
        }
        if !eval_pred(to_label, &succ_attrs)? {
            continue;
        }
        let mut locals_next = locals_base.clone();
        for (name, value) in primed_values.iter() {
            if let Some(slot) = locals_next.iter_mut().find(|(n, _)| n == name) {
                slot.1 = value.clone();
            }
        }

        // Outputs, in template order. Concurrent calls consume fresh
        // tags from the pool, smallest first; the final sequential or
        // return output rides the input's thread; a return goes to the
        // stored caller. A concurrently invoked execution's final return
        // is discarded: nobody awaits it.
        let mut pool_state = s.state.clone();
        let mut out = Vec::new();
        for (i, template) in t.outputs.iter().enumerate() {
            let last = i + 1 == t.outputs.len();
            match template.kind {
                OutputKind::Conc => {
                    let target = eval_obj(&template.target, &post_env)?;
                    let (tag, next) = pool_state.alloc_tag()?;
                    pool_state = next;
                    out.push(Message::conc_call(
                        s.id.clone(),
                        target,
                        tag,
                        template.message.clone(),
                        eval_args(&template.args, &post_env)?,
                    ));
                }
                OutputKind::Seq => {
                    let target = eval_obj(&template.target, &post_env)?;
                    out.push(Message::sequ_call(
                        s.id.clone(),
                        target,
                        m.tag.clone(),
                        template.message.clone(),
                        eval_args(&template.args, &post_env)?,
                    ));
                }
                OutputKind::Ret => {
                    if invoked_concurrently && last {
                        continue;
                    }
                    out.push(Message::ret(
                        s.id.clone(),
                        stored_caller.clone(),
                        m.tag.clone(),
                        eval_args(&template.args, &post_env)?,
                    ));
                }
            }
        }

        // Stack discipline row for (input kind, actual last output kind).
        let last_kind = out.last().map(|msg| msg.kind);
        let src_stack = s.state.stack(&m.tag).clone();
        let new_stack = match candidate.resume {
            None => match last_kind {
                Some(MessageKind::SequCall) => {
                    let mut frame_env = candidate.binding.clone();
                    for (name, value) in &locals_next {
                        frame_env.insert(name.clone(), value.clone());
                    }
                    Some(src_stack.push(ServiceInvocation {
                        env: frame_env,
                        arg_names: candidate.binding.names().map(String::from).collect(),
                        pc: ProgramCounter::new(svc.name.clone(), t.to.clone()),
                        caller: m.snd.clone(),
                        concurrent: m.kind == MessageKind::ConcCall,
                    }))
                }
                Some(MessageKind::Ret) => Some(src_stack.clone()),
                // Concurrent-only output completes a concurrent start in
                // place; a sequential start has no row for it and the
                // validator rejects descriptions that would need one.
                Some(MessageKind::ConcCall) | None => {
                    if m.kind == MessageKind::ConcCall {
                        Some(src_stack.clone())
                    } else {
                        None
                    }
                }
            },
            Some(frame) => {
                let updated = |locals_next: &[(String, Value)]| {
                    let mut env = frame.env.clone();
                    for (name, value) in locals_next {
                        env.insert(name.clone(), value.clone());
                    }
                    ServiceInvocation {
                        env,
                        arg_names: frame.arg_names.clone(),
                        pc: ProgramCounter::new(svc.name.clone(), t.to.clone()),
                        caller: frame.caller.clone(),
                        concurrent: frame.concurrent,
                    }
                };
                match last_kind {
                    Some(MessageKind::Ret) => src_stack.pop().ok().map(Some).unwrap_or(None),
                    Some(MessageKind::SequCall) | Some(MessageKind::ConcCall) | None => {
                        src_stack.replace_top(updated(&locals_next)).ok()
                    }
                }
            }
        };
        let new_stack = match new_stack {
            Some(stack) => stack,
            None => continue,
        };

        let mut successor = pool_state;
        successor.attrs = succ_attrs;
        successor.set_stack(m.tag.clone(), new_stack);
        outcomes.push(StepOutcome {
            successor: MachineState::new(s.id.clone(), successor),
            out,
            chaos: false,
            fired: Some(FiredTransition {
                service: svc.name.clone(),
                from: t.from.clone(),
                to: t.to.clone(),
                resumed: candidate.resume.is_some(),
            }),
        });
    }
    Ok(outcomes)
}

fn eval_obj(e: &crate::spec::Expr, env: &VarAssignment) -> Result<ObjectId, CandidateError> {
    match eval_expr(e, env)? {
        Value::Obj(id) => Ok(id),
        v => Err(CandidateError::Eval(EvalError::TypeMismatch(format!(
            "output target evaluated to {}",
            v.kind_name()
        )))),
    }
}

fn eval_args(
    args: &[crate::spec::Expr],
    env: &VarAssignment,
) -> Result<Vec<Value>, CandidateError> {
    args.iter().map(|a| Ok(eval_expr(a, env)?)).collect()
}

/// Convenience for building a pool `owner:0 .. owner:n-1`.
pub fn tag_pool(owner: &ObjectId, size: u32) -> BTreeSet<Tag> {
    (0..size).map(|i| Tag::new(owner.clone(), i)).collect()
}

/// Pick the initial machine state matching an attribute selection.
pub fn select_initial(
    beh: &BehaviorDescription,
    id: &ObjectId,
    pool: &BTreeSet<Tag>,
    attrs: &VarAssignment,
) -> Result<MachineState, SemanticsError> {
    let states = initial_states(beh, id, pool)?;
    states
        .into_iter()
        .find(|s| &s.state.attrs == attrs)
        .ok_or_else(|| SemanticsError::IllegalInput {
            reason: "selected attributes do not satisfy the initial predicate".into(),
            message: attrs.to_string(),
        })
}
