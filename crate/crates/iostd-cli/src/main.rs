//! Command-line front end: validate behavior files, run and explore
//! manifests, export explicit machines, and run the analysis passes.
//!
//! Exit codes: 0 success, 1 findings or violations, 2 usage or I/O
//! problems, 3 budget exhausted.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iostd::check::{
    audit_trace, enabledness_report, render_json_lines, render_lines, serializability_check,
    Finding,
};
use iostd::dsl::{self, PolicyDecl, SchedulerDecl};
use iostd::kernel::{ObjectId, Tag};
use iostd::semantics::{enumerate_machine, SemanticsError};
use iostd::sim::{explore, run, SimError, StopReason, Trace};
use iostd::spec::validate;

use manifest::{read_file, RunManifest};

#[derive(Parser)]
#[command(
    name = "iostd",
    version,
    about = "Interpret, simulate, and explore service state transition diagrams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Lines,
    JsonLines,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Reject,
    Havoc,
}

impl From<PolicyArg> for PolicyDecl {
    fn from(p: PolicyArg) -> PolicyDecl {
        match p {
            PolicyArg::Reject => PolicyDecl::Reject,
            PolicyArg::Havoc => PolicyDecl::Havoc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Random,
    Roundrobin,
    Exhaustive,
}

impl From<SchedulerArg> for SchedulerDecl {
    fn from(s: SchedulerArg) -> SchedulerDecl {
        match s {
            SchedulerArg::Random => SchedulerDecl::Random,
            SchedulerArg::Roundrobin => SchedulerDecl::RoundRobin,
            SchedulerArg::Exhaustive => SchedulerDecl::Exhaustive,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and statically validate behavior files.
    Validate {
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Lines)]
        format: FormatArg,
    },
    /// Execute one scheduled run of a manifest and write its trace.
    Run {
        manifest: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long, value_enum)]
        scheduler: Option<SchedulerArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively explore all interleavings of a manifest's script.
    Explore {
        manifest: PathBuf,
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the explicit machine of the manifest's first object.
    Export {
        manifest: PathBuf,
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analysis passes over specs, traces, and manifests.
    Check {
        #[command(subcommand)]
        what: CheckCommand,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Report where a message shape matches no enabled transition.
    Enabledness {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Lines)]
        format: FormatArg,
    },
    /// Re-check a recorded trace against the transition discipline.
    Audit {
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Lines)]
        format: FormatArg,
    },
    /// Check interleaved terminals against one-at-a-time executions.
    Serializability {
        manifest: PathBuf,
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormatArg::Lines)]
        format: FormatArg,
    },
}

/// A command's failure, carrying its exit code.
pub enum Failure {
    /// Findings or violations were reported (already rendered).
    Findings(String),
    Usage(String),
    Io(String),
    Budget(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Findings(text) => {
                print!("{}", text);
                ExitCode::from(1)
            }
            Failure::Usage(text) => {
                eprintln!("{}", text.trim_end());
                ExitCode::from(2)
            }
            Failure::Io(text) => {
                eprintln!("{}", text.trim_end());
                ExitCode::from(2)
            }
            Failure::Budget(text) => {
                print!("{}", text);
                ExitCode::from(3)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.report(),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { files, format } => cmd_validate(&files, format),
        Command::Run {
            manifest,
            seed,
            policy,
            scheduler,
            out,
        } => cmd_run(&manifest, seed, policy, scheduler, out.as_deref()),
        Command::Explore {
            manifest,
            bound,
            policy,
            out,
        } => cmd_explore(&manifest, bound, policy, out.as_deref()),
        Command::Export {
            manifest,
            bound,
            policy,
            out,
        } => cmd_export(&manifest, bound, policy, out.as_deref()),
        Command::Check { what } => match what {
            CheckCommand::Enabledness { spec, format } => cmd_check_enabledness(&spec, format),
            CheckCommand::Audit { trace, format } => cmd_check_audit(&trace, format),
            CheckCommand::Serializability {
                manifest,
                bound,
                format,
            } => cmd_check_serializability(&manifest, bound, format),
        },
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {}", path.display(), e))),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn render_findings(findings: &[Finding], format: FormatArg) -> String {
    match format {
        FormatArg::Lines => render_lines(findings),
        FormatArg::JsonLines => render_json_lines(findings),
    }
}

fn cmd_validate(files: &[PathBuf], _format: FormatArg) -> Result<(), Failure> {
    if files.is_empty() {
        return Err(Failure::Usage("validate: no files given".into()));
    }
    let mut failed = false;
    let mut output = String::new();
    for file in files {
        let text = read_file(file)?;
        match dsl::parse(&text) {
            Err(errors) => {
                failed = true;
                for e in errors {
                    output.push_str(&format!("ERROR parse-error {}:{}\n", file.display(), e));
                }
            }
            Ok(beh) => {
                let report = validate(&beh);
                if !report.is_clean() {
                    failed = true;
                }
                for line in report.render_lines().lines() {
                    output.push_str(&format!("{} {}\n", file.display(), line));
                }
            }
        }
    }
    if failed {
        Err(Failure::Findings(output))
    } else {
        print!("{}", output);
        Ok(())
    }
}

fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    policy: Option<PolicyArg>,
    scheduler: Option<SchedulerArg>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let manifest = RunManifest::load(path)?;
    let cfg = manifest.configuration()?;
    let script = manifest.script();
    let sched = manifest.scheduler(seed, scheduler.map(Into::into));
    let policy = manifest.policy(policy.map(Into::into));
    let trace = run(&cfg, &script, &sched, policy).map_err(|e| Failure::Usage(e.to_string()))?;
    let aborted = trace.stop == StopReason::Aborted;
    emit(out, &trace.render())?;
    if aborted {
        Err(Failure::Findings(String::new()))
    } else {
        Ok(())
    }
}

fn cmd_explore(
    path: &Path,
    bound: Option<usize>,
    policy: Option<PolicyArg>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let manifest = RunManifest::load(path)?;
    let cfg = manifest.configuration()?;
    let script = manifest.script();
    let policy = manifest.policy(policy.map(Into::into));
    let bound = manifest.bound(bound);
    match explore(&cfg, &script, bound, policy, &[iostd::sim::chaos_reached()]) {
        Ok(report) => {
            let text = report.render();
            let violated = !report.violations.is_empty();
            emit(out, &text)?;
            if violated {
                Err(Failure::Findings(String::new()))
            } else {
                Ok(())
            }
        }
        Err(SimError::BudgetExceeded { partial }) => {
            emit(out, &partial.render())?;
            Err(Failure::Budget(String::new()))
        }
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}

fn cmd_export(
    path: &Path,
    bound: Option<usize>,
    policy: Option<PolicyArg>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let manifest = RunManifest::load(path)?;
    let cfg = manifest.configuration()?;
    let policy = manifest.policy(policy.map(Into::into));
    let bound = manifest.bound(bound);
    let (id, slot) = cfg
        .objects
        .iter()
        .next()
        .ok_or_else(|| Failure::Usage("export: the manifest declares no object".into()))?;
    let peers: Vec<ObjectId> = std::iter::once(cfg.env.clone())
        .chain(cfg.objects.keys().filter(|k| *k != id).cloned())
        .collect();
    let tags: Vec<Tag> = (0..manifest.doc.exttags)
        .map(|i| Tag::new(cfg.env.clone(), i))
        .collect();
    let pool = slot.machine.state.pool.clone();
    match enumerate_machine(&slot.behavior, id, &pool, &peers, &tags, bound, policy) {
        Ok(machine) => emit(out, &machine.render()),
        Err(SemanticsError::BudgetExceeded { partial, .. }) => {
            emit(out, &partial.render())?;
            Err(Failure::Budget(String::new()))
        }
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}

fn cmd_check_enabledness(spec: &Path, format: FormatArg) -> Result<(), Failure> {
    let text = read_file(spec)?;
    let beh = dsl::parse(&text).map_err(|errors| {
        let mut out = String::new();
        for e in errors {
            out.push_str(&format!("ERROR parse-error {}:{}\n", spec.display(), e));
        }
        Failure::Findings(out)
    })?;
    let report = validate(&beh);
    if !report.is_clean() {
        return Err(Failure::Findings(report.render_lines()));
    }
    let findings = enabledness_report(&beh);
    let rendered = render_findings(&findings, format);
    if findings.is_empty() {
        print!("{}", rendered);
        Ok(())
    } else {
        Err(Failure::Findings(rendered))
    }
}

fn cmd_check_audit(path: &Path, format: FormatArg) -> Result<(), Failure> {
    let text = read_file(path)?;
    let trace = Trace::parse(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    let findings = audit_trace(&trace);
    let rendered = render_findings(&findings, format);
    if findings.is_empty() {
        print!("{}", rendered);
        Ok(())
    } else {
        Err(Failure::Findings(rendered))
    }
}

fn cmd_check_serializability(
    path: &Path,
    bound: Option<usize>,
    format: FormatArg,
) -> Result<(), Failure> {
    let manifest = RunManifest::load(path)?;
    let cfg = manifest.configuration()?;
    let injections: Vec<_> = manifest
        .script()
        .injections
        .into_iter()
        .map(|i| i.message)
        .collect();
    let bound = manifest.bound(bound);
    let policy = manifest.policy(None);
    match serializability_check(&cfg, &injections, bound, policy) {
        Ok(findings) => {
            let rendered = render_findings(&findings, format);
            if findings.is_empty() {
                print!("{}", rendered);
                Ok(())
            } else {
                Err(Failure::Findings(rendered))
            }
        }
        Err(SimError::BudgetExceeded { .. }) => Err(Failure::Budget("budget exhausted\n".into())),
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}
