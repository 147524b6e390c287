//! The `nmo` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{ArgAction, Args, Parser, Subcommand};
use nmo_core::parser::{parse_program, ProgramError};
use nmo_core::reasoner::{Clock, ExecutionReport, InputError, LimitExceeded, Limits, ReasonError, Reasoner};

use crate::io::{self, ExportFormat, Exporter, IoError};

#[derive(Debug, Parser)]
#[command(name = "nmo", version, about = "Materialise Datalog programs over files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the sources of a program, apply its rules and export results.
    Run(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Rule file; source paths in it are relative to its directory.
    pub program: PathBuf,
    /// Directory receiving one `<predicate>.<ext>` file per export.
    #[arg(long, value_name = "DIR")]
    pub export_dir: Option<PathBuf>,
    /// Replace existing export files.
    #[arg(long)]
    pub overwrite: bool,
    #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
    pub format: ExportFormat,
    #[arg(long, value_name = "N", default_value_t = Limits::default().max_facts)]
    pub max_facts: usize,
    #[arg(long, value_name = "N", default_value_t = Limits::default().max_iterations)]
    pub max_iterations: usize,
    /// Wall-clock limit for reasoning.
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<f64>,
    /// Predicates to export instead of all derived ones.
    #[arg(long = "export", value_name = "PRED", num_args = 1.., action = ArgAction::Append)]
    pub export: Vec<String>,
    /// Print `load_ms=` and `reason_ms=` lines.
    #[arg(long)]
    pub timing: bool,
    /// More log output; repeat for more.
    #[arg(short, long, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {}", path.display(), error)]
    Program { path: PathBuf, error: ProgramError },
    #[error("{0}")]
    Reason(#[from] ReasonError),
    #[error("{0}")]
    Io(#[from] IoError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Program { .. } => 1,
            RunError::Reason(ReasonError::NegationCycle(_)) => 1,
            RunError::Reason(ReasonError::Limit(_)) => 3,
            RunError::Reason(ReasonError::Input(_)) | RunError::Io(_) => 2,
        }
    }
}

impl From<InputError> for RunError {
    fn from(e: InputError) -> Self {
        RunError::Reason(ReasonError::Input(e))
    }
}

impl From<LimitExceeded> for RunError {
    fn from(e: LimitExceeded) -> Self {
        RunError::Reason(ReasonError::Limit(e))
    }
}

struct InstantClock(Instant);

impl Clock for InstantClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// What a successful run did.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: ExecutionReport,
    pub loaded_facts: usize,
    pub exported: Vec<(String, PathBuf, usize)>,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let Command::Run(args) = cli.command;
    match run(&args, out) {
        Ok(_) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(args: &RunArgs, out: &mut dyn Write) -> Result<RunOutcome, RunError> {
    if !args.export.is_empty() && args.export_dir.is_none() {
        return Err(RunError::Usage("--export requires --export-dir".into()));
    }
    let timeout = match args.timeout {
        Some(secs) if secs.is_finite() && secs >= 0.0 => Some(Duration::from_secs_f64(secs)),
        Some(secs) => return Err(RunError::Usage(format!("invalid timeout {secs}"))),
        None => None,
    };
    let limits = Limits {
        max_facts: args.max_facts,
        max_iterations: args.max_iterations,
        timeout,
    };
    let clock = InstantClock(Instant::now());

    let text = std::fs::read_to_string(&args.program).map_err(|e| IoError::Io {
        path: args.program.clone(),
        source: e,
    })?;
    let program = parse_program(&text).map_err(|error| RunError::Program {
        path: args.program.clone(),
        error,
    })?;
    let base = args.program.parent().unwrap_or(Path::new("."));
    let mut reasoner = Reasoner::new(program)?;
    let mut loaded_facts = reasoner.state().total_facts();
    let sources = reasoner.program().sources.clone();
    for source in &sources {
        let types = reasoner.position_types(&source.predicate, source.arity);
        let rows = io::load_source(base, source, &types)?;
        log::info!("loaded {} rows for {} from {}", rows.len(), source.predicate, source.path);
        loaded_facts += reasoner.add_facts(&source.predicate, rows)?;
    }
    let load_time = clock.now();
    reasoner.report_mut().load_time = load_time;

    let outcome = reasoner.materialise(&limits, &clock).map(|_| ());
    let report = reasoner.report().clone();
    print_report(out, &report, loaded_facts, sources.len(), args.timing);
    outcome?;

    let mut exported = Vec::new();
    if let Some(dir) = &args.export_dir {
        let predicates: Vec<String> = if args.export.is_empty() {
            reasoner
                .program()
                .derived_predicates()
                .into_iter()
                .map(String::from)
                .collect()
        } else {
            args.export.clone()
        };
        let mut exporter = Exporter::new(dir, args.format, args.overwrite);
        for predicate in predicates {
            if reasoner.state().relation(&predicate).is_none() {
                return Err(RunError::Usage(format!("unknown predicate {predicate}")));
            }
            if let Some((path, rows)) = exporter.export(&predicate, reasoner.state())? {
                let _ = writeln!(out, "exported {predicate}: {rows} rows to {}", path.display());
                exported.push((predicate, path, rows));
            }
        }
    }
    Ok(RunOutcome {
        report,
        loaded_facts,
        exported,
    })
}

fn print_report(
    out: &mut dyn Write,
    report: &ExecutionReport,
    loaded: usize,
    sources: usize,
    timing: bool,
) {
    let ms = |d: Duration| d.as_millis();
    let _ = writeln!(
        out,
        "loaded {loaded} facts from {sources} sources in {} ms",
        ms(report.load_time)
    );
    let _ = writeln!(
        out,
        "reasoning took {} ms over {} strata",
        ms(report.reasoning_time()),
        report.stratum_times.len()
    );
    for (i, (time, iterations)) in report
        .stratum_times
        .iter()
        .zip(&report.stratum_iterations)
        .enumerate()
    {
        let _ = writeln!(
            out,
            "  stratum {}: {iterations} iterations, {} ms",
            i + 1,
            ms(*time)
        );
    }
    let _ = writeln!(out, "derived facts:");
    for (predicate, count) in &report.derived {
        let _ = writeln!(out, "  {predicate}: {count}");
    }
    if report.chase_applications > 0 {
        let _ = writeln!(
            out,
            "chase: {} applications, {} nulls",
            report.chase_applications, report.nulls
        );
    }
    if timing {
        let _ = writeln!(out, "load_ms={}", ms(report.load_time));
        let _ = writeln!(out, "reason_ms={}", ms(report.reasoning_time()));
    }
}
