//! The `contropt` command line: `run`, `bench` and `list`.
//!
//! Exit codes: 0 on success, 1 on a usage error (bad flags, unknown problem,
//! unreadable or invalid config), 2 when the optimisation itself fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::harness::{run_benchmark, run_once};
use crate::bench::objectives::ObjectiveSpec;
use crate::bench::output::{bench_json, run_json, write_bench_csv, write_run_csv};
use crate::contraction::{RunConfig, Termination};
use crate::error::Error;
use crate::exec::Exec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Caps the worker threads used for concurrent repeats.
pub const THREADS_ENV: &str = "CONTROPT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "contropt", version, about = "Global optimisation by domain contraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimise one problem once.
    Run(RunArgs),
    /// Repeat a problem over consecutive seeds and aggregate the gaps.
    Bench(BenchArgs),
    /// List the registered problems.
    List,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    problem: String,
    /// Dimension, or the atom count for lj.
    #[arg(long)]
    dim: Option<usize>,
    /// Flat TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of runs, seeded `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Also run random and grid search on the same budget.
    #[arg(long)]
    baselines: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(msg: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: msg.to_string() }
    }

    fn runtime(msg: impl ToString) -> Self {
        Failure { code: EXIT_RUNTIME, message: msg.to_string() }
    }
}

/// Engine errors are runtime failures except for bad configuration.
fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::usage(e),
        other => Failure::runtime(other),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code. Results go to `--out` or `stdout`; diagnostics go to `stderr`.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let threads = match thread_cap() {
        Ok(t) => t,
        Err(f) => return report(f, stderr),
    };
    let outcome = Exec::with_thread_cap(threads, move || {
        let mut buf = Vec::new();
        let r = dispatch(cli.command, &mut buf);
        (r, buf)
    });
    let (result, buf) = outcome;
    if stdout.write_all(&buf).and_then(|_| stdout.flush()).is_err() {
        return report(Failure::runtime("cannot write to stdout"), stderr);
    }
    match result {
        Ok(code) => code,
        Err(f) => report(f, stderr),
    }
}

fn report(f: Failure, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "contropt: {}", f.message);
    f.code
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

fn dispatch(cmd: Command, stdout: &mut Vec<u8>) -> Result<i32, Failure> {
    match cmd {
        Command::List => {
            for spec in ObjectiveSpec::registry() {
                writeln!(stdout, "{spec}").map_err(Failure::runtime)?;
            }
            Ok(EXIT_OK)
        }
        Command::Run(args) => cmd_run(&args, stdout),
        Command::Bench(args) => cmd_bench(&args, stdout),
    }
}

fn load(args: &RunArgs) -> Result<(ObjectiveSpec, RunConfig), Failure> {
    let spec = ObjectiveSpec::lookup(&args.problem, args.dim).map_err(Failure::usage)?;
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(Failure::usage)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().map_err(Failure::usage)?;
    Ok((spec, config))
}

/// Writes to `--out` when given, else into the stdout buffer.
fn emit(out: &Option<PathBuf>, stdout: &mut Vec<u8>, write: impl FnOnce(&mut dyn Write) -> crate::Result<()>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(classify)?;
            w.flush().map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => write(stdout).map_err(classify),
    }
}

fn write_json(w: &mut dyn Write, value: &serde_json::Value) -> crate::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn is_failure(t: &Termination) -> bool {
    matches!(t, Termination::Failed { .. } | Termination::EvaluationError { .. })
}

fn cmd_run(args: &RunArgs, stdout: &mut Vec<u8>) -> Result<i32, Failure> {
    let (spec, config) = load(args)?;
    let summary = run_once(&spec, &config, config.seed).map_err(classify)?;
    emit(&args.out, stdout, |w| match args.format {
        Format::Csv => write_run_csv(w, &summary.trace, spec.f_star),
        Format::Json => write_json(w, &run_json(&config, &summary, spec.f_star)),
    })?;
    if is_failure(&summary.termination) {
        return Err(Failure::runtime(format!("run stopped early: {:?}", summary.termination)));
    }
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs, stdout: &mut Vec<u8>) -> Result<i32, Failure> {
    if args.repeats == 0 {
        return Err(Failure::usage("--repeats must be >= 1"));
    }
    let (spec, config) = load(&args.run)?;
    let seeds: Vec<u64> = (0..args.repeats as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let report = run_benchmark(&spec, &config, &seeds, args.baselines).map_err(classify)?;
    emit(&args.run.out, stdout, |w| match args.run.format {
        Format::Csv => write_bench_csv(w, &report),
        Format::Json => write_json(w, &bench_json(&report)),
    })?;
    let failed = report.runs.iter().filter(|r| is_failure(&r.termination)).count();
    if failed > 0 {
        return Err(Failure::runtime(format!("{failed} of {} runs stopped early", report.runs.len())));
    }
    Ok(EXIT_OK)
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    cli_main(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("contropt").chain(args.iter().copied());
        let code = cli_main(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_names_every_problem() {
        let (code, out, _) = call(&["list"]);
        assert_eq!(code, 0);
        for p in crate::bench::PROBLEMS {
            assert!(out.contains(p), "{p} missing from {out}");
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&["run", "--problem", "nosuch"]).0, EXIT_USAGE);
        assert_eq!(call(&["run"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "--problem", "branin", "--format", "xml"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "--problem", "branin", "--dim", "3"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "--problem", "branin", "--config", "/nonexistent/x.toml"]).0, EXIT_USAGE);
        let (code, _, err) = call(&["bench", "--problem", "branin", "--repeats", "0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("repeats"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("bench"));
    }
}
