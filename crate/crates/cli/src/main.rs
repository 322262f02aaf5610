//! Batch front-end: parse a problem description, run the requested
//! computation, emit a report and CSV files.

mod runner;
mod spec;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "imptree",
    about = "Upper and lower expectations on imprecise probability trees",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a problem spec and write report.txt plus CSV outputs.
    Run {
        /// Path to the JSON problem spec.
        spec: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Override the task tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the task budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Override the task seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a problem spec without running it.
    Validate {
        /// Path to the JSON problem spec.
        spec: PathBuf,
    },
    /// Write one of the bundled demo specs and run it.
    Demo {
        /// Demo name: hitting-upper, hitting-lower or counterexample.
        name: String,
        /// Output directory (defaults to ./<name>-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const DEMOS: [(&str, &str); 3] = [
    ("hitting-upper", include_str!("../demos/hitting-upper.json")),
    ("hitting-lower", include_str!("../demos/hitting-lower.json")),
    ("counterexample", include_str!("../demos/counterexample.json")),
];

fn load_and_run(
    text: &str,
    out: &Path,
    tol: Option<f64>,
    budget: Option<usize>,
    seed: Option<u64>,
) -> Result<runner::RunStatus> {
    let mut compiled = spec::parse_spec(text)?;
    if let Some(t) = tol {
        compiled.spec.task.tol = t;
    }
    if let Some(b) = budget {
        compiled.spec.task.budget = b;
    }
    if let Some(s) = seed {
        compiled.spec.task.seed = s;
    }
    // Re-validate after overrides.
    let compiled = spec::compile(compiled.spec)?;
    runner::run(&compiled, out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch() {
        Ok(status) => ExitCode::from(u8::try_from(status.exit_code()).unwrap_or(1)),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> Result<runner::RunStatus> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            spec,
            out,
            tol,
            budget,
            seed,
        } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            load_and_run(&text, &out, tol, budget, seed)
        }
        Command::Validate { spec } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let compiled = spec::parse_spec(&text)?;
            println!("spec OK: task {}", compiled.spec.task.kind.name());
            Ok(runner::RunStatus::Pass)
        }
        Command::Demo { name, out } => {
            let Some((_, text)) = DEMOS.iter().find(|(n, _)| *n == name) else {
                let names: Vec<&str> = DEMOS.iter().map(|(n, _)| *n).collect();
                bail!("unknown demo `{name}`; available: {}", names.join(", "));
            };
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{name}-out")));
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(out.join("spec.json"), text)?;
            load_and_run(text, &out, None, None, None)
        }
    }
}
