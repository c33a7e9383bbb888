//! `emxcs`: verify compression schemes, build Kuratowski decompositions,
//! evaluate EMX learners and probe selectors from the command line.
//!
//! Exit codes: 0 success, 1 negative finding, 2 usage or input error,
//! 3 enumeration budget exceeded.

mod emx;
mod fiber;
mod kuratowski;
mod output;
mod scheme;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use output::{CliError, CliResult, Emitter, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "emxcs",
    version,
    about = "Compression schemes and EMX learning at finite scale"
)]
struct Cli {
    /// Worker threads for parallel enumeration (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Directory for output documents when `--out` is not given.
    #[arg(long, global = true, env = "EMXCS_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monotone compression schemes
    #[command(subcommand)]
    Scheme(scheme::SchemeCommand),
    /// Kuratowski decompositions of n^(k+2)
    #[command(subcommand)]
    Kuratowski(kuratowski::KuratowskiCommand),
    /// EMX evaluation of learners on finite-support distributions
    #[command(subcommand)]
    Emx(emx::EmxCommand),
    /// Continuity probes for coordinate-dropping selectors
    #[command(subcommand)]
    Fiber(fiber::FiberCommand),
}

/// Records the config, runs `f` and emits its result.
fn execute<T, F>(
    cli_jobs: Option<usize>,
    out_dir: Option<&PathBuf>,
    name: &str,
    args: &T,
    out: Option<PathBuf>,
    f: F,
) -> CliResult<Option<CliError>>
where
    T: Serialize,
    F: FnOnce() -> CliResult<Outcome>,
{
    let config = json!({ "command": name, "jobs": cli_jobs, "args": output::to_value(args)? });
    let emitter = Emitter::new(name, config, out, out_dir.map(|p| p.as_path()));
    let outcome = f()?;
    emitter.emit(&outcome.result)?;
    Ok(outcome.finding)
}

fn run(cli: Cli) -> CliResult<Option<CliError>> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    let jobs = cli.jobs;
    let out_dir = cli.out_dir.as_ref();
    match cli.command {
        Command::Scheme(scheme::SchemeCommand::Verify(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "scheme verify", &a, a.out.clone(), || scheme::verify(&a))
        }
        Command::Kuratowski(kuratowski::KuratowskiCommand::Build(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "kuratowski build", &a, a.out.clone(), || {
                kuratowski::build(&a)
            })
        }
        Command::Kuratowski(kuratowski::KuratowskiCommand::Check(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "kuratowski check", &a, a.out.clone(), || {
                kuratowski::check(&a)
            })
        }
        Command::Kuratowski(kuratowski::KuratowskiCommand::ToScheme(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "kuratowski to-scheme", &a, a.out.clone(), || {
                kuratowski::to_scheme(&a)
            })
        }
        Command::Emx(emx::EmxCommand::Eval(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "emx eval", &a, a.out.clone(), || emx::eval(&a))
        }
        Command::Emx(emx::EmxCommand::DeriveScheme(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "emx derive-scheme", &a, a.out.clone(), || {
                emx::derive_scheme(&a)
            })
        }
        Command::Emx(emx::EmxCommand::Sweep(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "emx sweep", &a, a.out.clone(), || emx::sweep(&a))
        }
        Command::Fiber(fiber::FiberCommand::Probe(a)) => {
            let a = a.resolved()?;
            execute(jobs, out_dir, "fiber probe", &a, a.out.clone(), || fiber::probe(&a))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let err = match run(cli) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(finding)) => finding,
        Err(e) => e,
    };
    eprintln!("{}", err.to_json());
    ExitCode::from(err.code)
}
