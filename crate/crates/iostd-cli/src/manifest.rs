//! Loading a run manifest: parse it, load and validate the behavior
//! files it references, and build the configuration, script, scheduler,
//! and policy a command needs. A manifest plus its spec files fully
//! determines a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use iostd::dsl::{self, ManifestDoc, PolicyDecl, SchedulerDecl};
use iostd::kernel::{Message, MessageKind, ObjectId, Tag, VarAssignment};
use iostd::semantics::ChaosPolicy;
use iostd::sim::{content_digest, Configuration, Scheduler, Script};
use iostd::spec::{validate, BehaviorDescription};

use crate::Failure;

pub struct RunManifest {
    pub doc: ManifestDoc,
    pub behaviors: BTreeMap<String, Arc<BehaviorDescription>>,
    pub corpus_digest: String,
    pub spec_files: Vec<(String, String)>,
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {}", path.display(), e)))
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest, Failure> {
        let text = read_file(path)?;
        let doc = dsl::parse_manifest(&text).map_err(|errors| {
            let mut out = String::new();
            for e in &errors {
                out.push_str(&format!("{}: {}\n", path.display(), e));
            }
            Failure::Usage(out)
        })?;

        let dir = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        let mut behaviors = BTreeMap::new();
        let mut sources = String::new();
        let mut spec_files = Vec::new();
        for spec in &doc.specs {
            let spec_path = resolve(&dir, spec);
            let spec_text = read_file(&spec_path)?;
            spec_files.push((spec.clone(), content_digest(&spec_text)));
            let beh = dsl::parse(&spec_text).map_err(|errors| {
                let mut out = String::new();
                for e in &errors {
                    out.push_str(&format!("{}: {}\n", spec_path.display(), e));
                }
                Failure::Findings(out)
            })?;
            let report = validate(&beh);
            if !report.is_clean() {
                return Err(Failure::Findings(report.render_lines()));
            }
            sources.push_str(&spec_text);
            behaviors.insert(beh.name.clone(), Arc::new(beh));
        }
        let corpus_digest = content_digest(&sources);
        Ok(RunManifest {
            doc,
            behaviors,
            corpus_digest,
            spec_files,
        })
    }

    pub fn configuration(&self) -> Result<Configuration, Failure> {
        let mut cfg = Configuration::new(ObjectId::new("env"));
        cfg.corpus_digest = self.corpus_digest.clone();
        cfg.spec_files = self.spec_files.clone();
        for object in &self.doc.objects {
            let behavior = self.behaviors.get(&object.behavior).ok_or_else(|| {
                Failure::Usage(format!(
                    "object {} references behavior `{}`, which no spec file declares",
                    object.id, object.behavior
                ))
            })?;
            let mut attrs = VarAssignment::new();
            for (name, value) in &object.attrs {
                attrs.insert(name.clone(), value.clone());
            }
            cfg.add_object(
                ObjectId::new(object.id.clone()),
                behavior.clone(),
                object.pool,
                &attrs,
            )
            .map_err(|e| Failure::Usage(format!("object {}: {}", object.id, e)))?;
        }
        Ok(cfg)
    }

    /// Injections in manifest order; the k-th injection rides the
    /// environment-owned tag `env:k`.
    pub fn script(&self) -> Script {
        let env = ObjectId::new("env");
        let mut script = Script::new();
        for (k, inject) in self.doc.injections.iter().enumerate() {
            let tag = Tag::new(env.clone(), k as u32);
            let rec = ObjectId::new(inject.target.clone());
            let message = match inject.kind {
                MessageKind::SequCall => Message::sequ_call(
                    env.clone(),
                    rec,
                    tag,
                    inject.service.clone(),
                    inject.args.clone(),
                ),
                MessageKind::ConcCall => Message::conc_call(
                    env.clone(),
                    rec,
                    tag,
                    inject.service.clone(),
                    inject.args.clone(),
                ),
                MessageKind::Ret => Message::ret(env.clone(), rec, tag, inject.args.clone()),
            };
            script = script.inject(inject.at, message);
        }
        if let Some(steps) = self.doc.stop_steps {
            script = script.with_max_steps(steps);
        }
        script
    }

    pub fn scheduler(
        &self,
        seed_override: Option<u64>,
        scheduler_override: Option<SchedulerDecl>,
    ) -> Scheduler {
        let decl = scheduler_override.unwrap_or(self.doc.scheduler);
        let seed = seed_override.unwrap_or(self.doc.seed);
        match decl {
            SchedulerDecl::Random => Scheduler::SeededRandom { seed },
            SchedulerDecl::RoundRobin => Scheduler::RoundRobin,
            SchedulerDecl::Exhaustive => Scheduler::Exhaustive {
                bound: self.bound(None),
            },
        }
    }

    pub fn policy(&self, policy_override: Option<PolicyDecl>) -> ChaosPolicy {
        match policy_override.unwrap_or(self.doc.policy) {
            PolicyDecl::Reject => ChaosPolicy::Reject,
            PolicyDecl::Havoc => ChaosPolicy::Havoc,
        }
    }

    pub fn bound(&self, bound_override: Option<usize>) -> usize {
        bound_override.or(self.doc.bound).unwrap_or(100_000)
    }
}

fn resolve(dir: &Path, spec: &str) -> PathBuf {
    let p = Path::new(spec);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}
