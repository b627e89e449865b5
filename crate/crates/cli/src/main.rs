use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qhevolve::exec::Execution;
use qhevolve::run::{run, sweep};
use qhevolve::scenario::{apply_overrides, from_document, parse_document, Document};
use qhevolve::{Error, ErrorKind};

/// Time evolution under non-Hermitian, quasi-Hermitian Hamiltonians.
#[derive(Parser)]
#[command(name = "qhevolve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    file: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replace a document value, e.g. `time.dt=5e-4`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run(Common),
    /// Run a scenario once per parameter value.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path of the swept value, e.g. `model.params.gamma`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
}

fn load(common: &Common) -> Result<(Document, String), Error> {
    let text = std::fs::read_to_string(&common.file)?;
    let mut doc = parse_document(&text)?;
    apply_overrides(&mut doc, &common.overrides)?;
    let stem = common
        .file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    Ok((doc, stem))
}

fn execution(common: &Common) -> Execution {
    if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn cmd_run(common: &Common) -> Result<bool, Error> {
    let (doc, stem) = load(common)?;
    let config = from_document(doc, Some(&stem))?;
    let exec = execution(common);
    let report = exec.with_jobs(common.jobs, || run(&config, exec))?;
    report.write_to(&common.out)?;
    print!("{}", report.summary());
    Ok(report.passed)
}

fn cmd_sweep(common: &Common, param: &str, values: &[String]) -> Result<ExitCode, Error> {
    let (doc, stem) = load(common)?;
    let values: Vec<String> = values
        .iter()
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    let report = sweep(&doc, &stem, param, &values, common.jobs, execution(common))?;
    report.write_to(Path::new(&common.out))?;
    print!("{}", report.summary());
    Ok(match report.first_error_kind() {
        Some(ErrorKind::Config) => ExitCode::from(2),
        Some(ErrorKind::Numerical) => ExitCode::from(3),
        None if report.all_passed() => ExitCode::SUCCESS,
        None => ExitCode::from(1),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(common) => cmd_run(common).map(|passed| {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }),
        Command::Sweep {
            common,
            param,
            values,
        } => cmd_sweep(common, param, values),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
