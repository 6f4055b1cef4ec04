//! Direct recursive interpreter for purely sequential execution, written
//! against the description syntax and expression evaluator alone. It
//! never touches the machine-step derivation, so it can serve as an
//! independent reference for the single-thread special case.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use iostd::kernel::{ObjectId, Value, VarAssignment};
use iostd::spec::domains::assignments;
use iostd::spec::{
    eval_expr, eval_pred, primed_key, BehaviorDescription, DiagramTransition, Domain, OutputKind,
    ServiceStd, SENDER_NAME,
};

pub struct SeqOracle {
    pub behaviors: BTreeMap<ObjectId, Arc<BehaviorDescription>>,
    pub attrs: BTreeMap<ObjectId, VarAssignment>,
    /// Attribute snapshot per executed transition, in execution order.
    pub evolution: Vec<(ObjectId, VarAssignment)>,
}

impl SeqOracle {
    pub fn new(objects: &[(ObjectId, Arc<BehaviorDescription>, VarAssignment)]) -> SeqOracle {
        SeqOracle {
            behaviors: objects
                .iter()
                .map(|(id, b, _)| (id.clone(), b.clone()))
                .collect(),
            attrs: objects
                .iter()
                .map(|(id, _, a)| (id.clone(), a.clone()))
                .collect(),
            evolution: Vec::new(),
        }
    }

    /// Execute one sequential call to completion and return the answer's
    /// argument values. Panics when the description is nondeterministic
    /// at any step; the sequential scenarios used with the oracle are
    /// deterministic by construction.
    pub fn call(
        &mut self,
        caller: &ObjectId,
        rec: &ObjectId,
        service: &str,
        args: &[Value],
    ) -> Vec<Value> {
        let beh = self.behaviors.get(rec).expect("configured object").clone();
        let svc = beh.service(service).expect("declared service");
        assert!(
            svc.callable.allows_sequential(),
            "sequential call to a conc-only service"
        );

        // The starting transition: from an initial state, pattern named
        // like the call, label and precondition satisfied.
        let starts: Vec<&DiagramTransition> = svc
            .transitions
            .iter()
            .filter(|t| svc.is_initial(&t.from) && t.pattern.name == service)
            .collect();
        let mut binding = VarAssignment::new();
        for (binder, value) in starts
            .first()
            .expect("a starting transition")
            .pattern
            .binders
            .iter()
            .zip(args)
        {
            binding.insert(binder.name.clone(), value.clone());
        }
        // All starts of one service share binder names in the corpus.
        if let Some(sender) = &starts[0].pattern.sender {
            binding.insert(sender.clone(), Value::Obj(caller.clone()));
        }
        binding.insert(SENDER_NAME, Value::Obj(caller.clone()));

        let mut frame = binding;
        for local in &svc.locals {
            if let Some(v) = local.domain.min_value() {
                frame.insert(local.name.clone(), v);
            }
        }

        let enabled: Vec<&DiagramTransition> = starts
            .into_iter()
            .filter(|t| self.guards_hold(rec, &beh, svc, t, &frame))
            .collect();
        assert_eq!(
            enabled.len(),
            1,
            "exactly one enabled start for {}.{}",
            rec,
            service
        );
        self.execute_from(caller, rec, &beh, svc, enabled[0], frame)
    }

    fn guards_hold(
        &self,
        rec: &ObjectId,
        _beh: &BehaviorDescription,
        svc: &ServiceStd,
        t: &DiagramTransition,
        frame: &VarAssignment,
    ) -> bool {
        let attrs = self.attrs.get(rec).expect("attrs");
        let env = attrs.merged(frame).with("self", Value::Obj(rec.clone()));
        let label = &svc.state(&t.from).expect("state").label;
        eval_pred(label, &env).unwrap_or(false) && eval_pred(&t.pre, &env).unwrap_or(false)
    }

    /// Run one transition, then keep executing the service (across
    /// nested sequential calls) until it answers; returns the answer.
    fn execute_from(
        &mut self,
        caller: &ObjectId,
        rec: &ObjectId,
        beh: &Arc<BehaviorDescription>,
        svc: &ServiceStd,
        first: &DiagramTransition,
        mut frame: VarAssignment,
    ) -> Vec<Value> {
        let mut transition = first.clone();
        loop {
            let post_env = self.apply_transition(rec, beh, svc, &transition, &frame);

            // Locals updated by the postcondition stay in the frame.
            for local in &svc.locals {
                if let Some(v) = post_env.lookup(&primed_key(&local.name)) {
                    frame.insert(local.name.clone(), v.clone());
                }
            }

            let last = transition.outputs.last().cloned();
            match last {
                Some(out) if out.kind == OutputKind::Ret => {
                    return out
                        .args
                        .iter()
                        .map(|a| eval_expr(a, &post_env).expect("ret argument"))
                        .collect();
                }
                Some(out) if out.kind == OutputKind::Seq => {
                    // Nested call: evaluate target and arguments, recurse,
                    // then resume at the wait state with the answer bound.
                    let target = match eval_expr(&out.target, &post_env).expect("target") {
                        Value::Obj(id) => id,
                        other => panic!("sequential call target is {}", other),
                    };
                    let call_args: Vec<Value> = out
                        .args
                        .iter()
                        .map(|a| eval_expr(a, &post_env).expect("call argument"))
                        .collect();
                    let answer = self.call(rec, &target, &out.message, &call_args);

                    let wait = transition.to.clone();
                    let resumes: Vec<DiagramTransition> = svc
                        .transitions
                        .iter()
                        .filter(|t| t.from == wait && t.pattern.name == iostd::kernel::RET_NAME)
                        .cloned()
                        .collect();
                    let mut resume_frame = frame.clone();
                    let resume = resumes
                        .iter()
                        .filter(|t| {
                            let mut f = frame.clone();
                            for (binder, value) in t.pattern.binders.iter().zip(&answer) {
                                f.insert(binder.name.clone(), value.clone());
                            }
                            if let Some(s) = &t.pattern.sender {
                                f.insert(s.clone(), Value::Obj(target.clone()));
                            }
                            self.guards_hold(rec, beh, svc, t, &f)
                        })
                        .collect::<Vec<_>>();
                    assert_eq!(resume.len(), 1, "exactly one enabled resume at {}", wait);
                    let resume = resume[0].clone();
                    for (binder, value) in resume.pattern.binders.iter().zip(&answer) {
                        resume_frame.insert(binder.name.clone(), value.clone());
                    }
                    if let Some(s) = &resume.pattern.sender {
                        resume_frame.insert(s.clone(), Value::Obj(target.clone()));
                    }
                    frame = resume_frame;
                    transition = resume;
                }
                _ => panic!(
                    "sequential execution of {}.{} neither answered nor suspended",
                    rec, svc.name
                ),
            }
            let _ = caller;
        }
    }

    /// Pick the unique successor the postcondition admits and commit it.
    fn apply_transition(
        &mut self,
        rec: &ObjectId,
        beh: &Arc<BehaviorDescription>,
        svc: &ServiceStd,
        t: &DiagramTransition,
        frame: &VarAssignment,
    ) -> VarAssignment {
        let attrs = self.attrs.get(rec).expect("attrs").clone();
        let env = attrs.merged(frame).with("self", Value::Obj(rec.clone()));
        assert!(self.guards_hold(rec, beh, svc, t, frame), "guards hold");

        let mut primed = BTreeSet::new();
        t.post.primed_names(&mut primed);
        let decls: Vec<(String, Domain)> = primed
            .iter()
            .map(|name| {
                let domain = beh
                    .attribute(name)
                    .map(|a| a.domain.clone())
                    .or_else(|| svc.local(name).map(|l| l.domain.clone()))
                    .expect("primed variable declared");
                (name.clone(), domain)
            })
            .collect();

        let to_label = &svc.state(&t.to).expect("state").label;
        let mut admitted: Vec<(VarAssignment, VarAssignment)> = Vec::new();
        for choice in assignments(&decls) {
            let mut post_env = env.clone();
            for (name, value) in choice.iter() {
                post_env.insert(primed_key(name), value.clone());
            }
            if !eval_pred(&t.post, &post_env).unwrap_or(false) {
                continue;
            }
            let mut succ = attrs.clone();
            for (name, value) in choice.iter() {
                if beh.attribute(name).is_some() {
                    succ.insert(name.clone(), value.clone());
                }
            }
            if eval_pred(to_label, &succ).unwrap_or(false) {
                admitted.push((succ, post_env));
            }
        }
        assert_eq!(
            admitted.len(),
            1,
            "exactly one successor for {}.{}",
            rec,
            svc.name
        );
        let (succ, post_env) = admitted.remove(0);
        self.attrs.insert(rec.clone(), succ.clone());
        self.evolution.push((rec.clone(), succ));
        post_env
    }
}
