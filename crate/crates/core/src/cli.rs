//! Command-line entry points.
//!
//! Every command returns a [`CommandOutcome`] instead of printing, so the
//! `ebk` binary and the tests share one code path. With no PATHS the
//! commands work on the embedded corpus.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::animator::{run_scenario, Scenario, ScenarioError};
use crate::checker::{check_refinement, explore, CheckError, Mode, RefinementCheck};
use crate::config::{CheckConfig, ConfigError};
use crate::corpus::{self, CorpusError};
use crate::obligations::{self, render_table, DischargeError, PoStatus};
use crate::project::{LoadError, Project};
use crate::semantics::{Model, SemanticError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ebk",
    version,
    about = "Bounded checking and animation of Event-B style machines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discharge proof obligations and explore the state space.
    Check {
        #[arg(long)]
        machine: Option<String>,
        #[arg(long, default_value = "closed")]
        mode: Mode,
        #[arg(long)]
        bounds: Option<PathBuf>,
        /// Write JSON-lines records here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for counterexample files.
        #[arg(long, default_value = "ebk-out")]
        out: PathBuf,
        paths: Vec<PathBuf>,
    },
    /// Check that CONCRETE refines ABSTRACT.
    Refine {
        #[arg(value_name = "ABSTRACT")]
        abstract_machine: String,
        concrete: String,
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        paths: Vec<PathBuf>,
    },
    /// List the proof obligations of one machine with their status.
    Pos {
        #[arg(long)]
        machine: String,
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        paths: Vec<PathBuf>,
    },
    /// Run a scenario file.
    Animate {
        scenario: PathBuf,
        /// Trace output; defaults to the scenario path with `.trace.jsonl`.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        bounds: Option<PathBuf>,
        paths: Vec<PathBuf>,
    },
    /// Serve the HTTP API on localhost.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        bounds: Option<PathBuf>,
        paths: Vec<PathBuf>,
    },
    /// Write the embedded corpus to a directory.
    Corpus { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    /// Machine-readable report written by the command, if any.
    pub report: Option<PathBuf>,
}

impl CommandOutcome {
    fn error(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        stderr.push('\n');
        CommandOutcome {
            code,
            stderr,
            ..Default::default()
        }
    }
}

/// A command that could not produce a verdict.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.to_string(),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::usage(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e)
    }
}

impl From<SemanticError> for Failure {
    fn from(e: SemanticError) -> Self {
        Failure::usage(e)
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure::internal(e)
    }
}

impl From<DischargeError> for Failure {
    fn from(e: DischargeError) -> Self {
        match e {
            DischargeError::Semantic(e) => e.into(),
            DischargeError::Config(e) => e.into(),
            e @ DischargeError::ExplorationCapExceeded(_) => Failure::internal(e),
        }
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::InitWd(_) => Failure {
                code: EXIT_FAILED,
                message: e.to_string(),
            },
            CheckError::ExplorationCapExceeded(_) => Failure::internal(e),
            _ => Failure::usage(e),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::usage(e)
    }
}

/// Parses `args` (program name first) and runs the command. Help and
/// version requests come back as exit 0 with the text on stdout.
pub fn run_from<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                CommandOutcome::error(EXIT_USAGE, text.trim_end())
            } else {
                CommandOutcome {
                    stdout: text,
                    ..Default::default()
                }
            }
        }
    }
}

pub fn run(cli: Cli) -> CommandOutcome {
    let result = match cli.command {
        Command::Check {
            machine,
            mode,
            bounds,
            report,
            out,
            paths,
        } => cmd_check(
            &paths,
            machine.as_deref(),
            mode,
            bounds.as_deref(),
            report.as_deref(),
            &out,
        ),
        Command::Refine {
            abstract_machine,
            concrete,
            bounds,
            report,
            paths,
        } => cmd_refine(
            &paths,
            &abstract_machine,
            &concrete,
            bounds.as_deref(),
            report.as_deref(),
        ),
        Command::Pos {
            machine,
            bounds,
            report,
            paths,
        } => cmd_pos(&paths, &machine, bounds.as_deref(), report.as_deref()),
        Command::Animate {
            scenario,
            trace,
            bounds,
            paths,
        } => cmd_animate(&scenario, &paths, bounds.as_deref(), trace.as_deref()),
        Command::Serve {
            port,
            bounds,
            paths,
        } => cmd_serve(&paths, port, bounds.as_deref()),
        Command::Corpus { dir } => corpus::write_corpus(&dir)
            .map(|_| CommandOutcome {
                stdout: format!("wrote {} files to {}\n", corpus::FILES.len(), dir.display()),
                ..Default::default()
            })
            .map_err(Failure::internal),
    };
    result.unwrap_or_else(|f| CommandOutcome::error(f.code, f.message))
}

/// The project from `paths`, or the embedded corpus when empty, with the
/// corpus bounds overridden by `bounds`.
pub fn load(paths: &[PathBuf], bounds: Option<&Path>) -> Result<(Project, CheckConfig), String> {
    load_inner(paths, bounds).map_err(|f| f.message)
}

fn load_inner(paths: &[PathBuf], bounds: Option<&Path>) -> Result<(Project, CheckConfig), Failure> {
    let corpus = corpus::load_corpus()?;
    let project = if paths.is_empty() {
        corpus.project
    } else {
        Project::load_paths(paths)?
    };
    let mut cfg = corpus.manifest.config;
    if let Some(b) = bounds {
        let text = std::fs::read_to_string(b)
            .map_err(|e| Failure::usage(format!("{}: {e}", b.display())))?;
        cfg = cfg.merged(&CheckConfig::parse(&text)?);
    }
    Ok((project, cfg))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::internal(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))
}

fn json_line(v: &serde_json::Value) -> String {
    serde_json::to_string(v).expect("serializable") + "\n"
}

pub fn cmd_check(
    paths: &[PathBuf],
    machine: Option<&str>,
    mode: Mode,
    bounds: Option<&Path>,
    report: Option<&Path>,
    out: &Path,
) -> Result<CommandOutcome, Failure> {
    let (project, cfg) = load_inner(paths, bounds)?;
    let machines = match machine {
        Some(m) if project.machine(m).is_none() => {
            return Err(Failure::usage(format!("unknown machine `{m}`")))
        }
        Some(m) => vec![m.to_string()],
        None => project.machine_names(),
    };
    let mut po_reports = Vec::new();
    let mut reach = String::new();
    let mut records = String::new();
    let mut artifacts = Vec::new();
    let mut failed = false;
    for m in &machines {
        let model = Model::new(&project, m, &cfg.consts)?;
        let po = obligations::report(&project, m, &cfg)?;
        let r = explore(&model, &cfg, mode)?;
        records.push_str(&po.to_json_lines(&model));
        records.push_str(&json_line(&r.to_json(&model)));
        if po.failed > 0 {
            let path = out.join(format!("{m}.pos.jsonl"));
            write_file(&path, &po.to_json_lines(&model))?;
            artifacts.push(path);
        }
        for v in &r.violations {
            let path = out.join(format!("{m}.{}.trace.jsonl", v.invariant));
            write_file(&path, &v.trace.to_json_lines(&model))?;
            artifacts.push(path);
        }
        failed |= po.failed > 0 || !r.passed();
        reach.push_str(&r.render(&model));
        po_reports.push(po);
    }
    let total_failed: usize = po_reports.iter().map(|r| r.failed).sum();
    let mut stdout = render_table(&po_reports, &cfg);
    stdout.push_str(&reach);
    stdout.push_str(&format!("failed: {total_failed}\n"));
    for a in &artifacts {
        stdout.push_str(&format!("counterexample: {}\n", a.display()));
    }
    if let Some(path) = report {
        write_file(path, &records)?;
    }
    Ok(CommandOutcome {
        code: if failed { EXIT_FAILED } else { EXIT_OK },
        stdout,
        stderr: String::new(),
        report: report.map(Path::to_path_buf),
    })
}

pub fn cmd_refine(
    paths: &[PathBuf],
    abstract_machine: &str,
    concrete: &str,
    bounds: Option<&Path>,
    report: Option<&Path>,
) -> Result<CommandOutcome, Failure> {
    let (project, cfg) = load_inner(paths, bounds)?;
    let r = check_refinement(&project, abstract_machine, concrete, &cfg)?;
    let mut stdout = String::new();
    for (tag, check) in [
        ("a", RefinementCheck::AbstractInvariant),
        ("b", RefinementCheck::GuardStrengthening),
        ("c", RefinementCheck::Simulation),
        ("d", RefinementCheck::NewEventFrame),
    ] {
        let n = r.failures.iter().filter(|f| f.check == check).count();
        let verdict = if n == 0 {
            "pass".to_string()
        } else {
            format!("FAIL ({n})")
        };
        stdout.push_str(&format!("({tag}) {check}: {verdict}\n"));
    }
    stdout.push_str(&r.render());
    if let Some(path) = report {
        let model = Model::new(&project, concrete, &cfg.consts)?;
        write_file(path, &json_line(&r.to_json(&model)))?;
    }
    Ok(CommandOutcome {
        code: if r.passed() { EXIT_OK } else { EXIT_FAILED },
        stdout,
        stderr: String::new(),
        report: report.map(Path::to_path_buf),
    })
}

pub fn cmd_pos(
    paths: &[PathBuf],
    machine: &str,
    bounds: Option<&Path>,
    report: Option<&Path>,
) -> Result<CommandOutcome, Failure> {
    let (project, cfg) = load_inner(paths, bounds)?;
    let model = Model::new(&project, machine, &cfg.consts)?;
    let po = obligations::report(&project, machine, &cfg)?;
    let mut stdout = String::new();
    for p in &po.obligations {
        stdout.push_str(&format!("{:<4} {:<11} {}\n", p.kind, p.status.name(), p.id));
        if let PoStatus::Failed(s) = &p.status {
            let cex: Vec<String> = model
                .render_state(s)
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            stdout.push_str(&format!("     counterexample: {}\n", cex.join(" ")));
        }
    }
    stdout.push_str(&render_table(std::slice::from_ref(&po), &cfg));
    if let Some(path) = report {
        write_file(path, &po.to_json_lines(&model))?;
    }
    Ok(CommandOutcome {
        code: if po.failed > 0 { EXIT_FAILED } else { EXIT_OK },
        stdout,
        stderr: String::new(),
        report: report.map(Path::to_path_buf),
    })
}

pub fn cmd_animate(
    scenario: &Path,
    paths: &[PathBuf],
    bounds: Option<&Path>,
    trace: Option<&Path>,
) -> Result<CommandOutcome, Failure> {
    let text = std::fs::read_to_string(scenario)
        .map_err(|e| Failure::usage(format!("{}: {e}", scenario.display())))?;
    let parsed = Scenario::parse(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", scenario.display())))?;
    let (project, cfg) = load_inner(paths, bounds)?;
    let r = run_scenario(&parsed, &project, &cfg)
        .map_err(|e| Failure::usage(format!("{}: {e}", scenario.display())))?;
    let config = cfg.merged(&parsed.config);
    let model = Model::new(&project, &parsed.machine, &config.consts)?;
    let trace_path = trace
        .map(Path::to_path_buf)
        .unwrap_or_else(|| scenario.with_extension("trace.jsonl"));
    write_file(&trace_path, &r.trace.to_json_lines(&model))?;

    let mut stdout = String::new();
    for line in &r.log {
        stdout.push_str(line);
        stdout.push('\n');
    }
    match &r.failure {
        None => stdout.push_str(&format!("PASS after {} step(s)\n", r.steps_executed)),
        Some(f) => stdout.push_str(&format!(
            "FAIL at step {} (line {}): {}\n",
            f.step, f.line, f.reason
        )),
    }
    let state: Vec<String> = model
        .render_state(&r.final_state)
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    stdout.push_str(&format!("final state: {}\n", state.join(" ")));
    stdout.push_str(&format!("trace: {}\n", trace_path.display()));
    Ok(CommandOutcome {
        code: if r.passed() { EXIT_OK } else { EXIT_FAILED },
        stdout,
        stderr: String::new(),
        report: Some(trace_path),
    })
}

fn cmd_serve(
    paths: &[PathBuf],
    port: u16,
    bounds: Option<&Path>,
) -> Result<CommandOutcome, Failure> {
    let (project, cfg) = load_inner(paths, bounds)?;
    let service = crate::service::Service::new(project, cfg);
    crate::service::serve(service, port)
        .map_err(|e| Failure::usage(format!("cannot serve on port {port}: {e}")))?;
    Ok(CommandOutcome::default())
}
