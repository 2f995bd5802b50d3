use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use robinlab_cli::{compare_text, format_rows, run, Scenario};

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "ROBINLAB_THREADS";

#[derive(Parser)]
#[command(name = "robinlab", version, about = "Heat semigroups with generalised Robin boundary operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a scenario file.
    Run {
        scenario: PathBuf,
        /// Overrides `output_dir` from the scenario.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `seed` from the scenario.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare two manifests written by `run`.
    Compare { first: PathBuf, second: PathBuf },
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn cmd_run(path: PathBuf, output_dir: Option<PathBuf>, seed: Option<u64>) -> Result<ExitCode> {
    let mut scn = Scenario::from_file(&path)?;
    if let Some(dir) = output_dir {
        scn.output_dir = dir;
    }
    if let Some(seed) = seed {
        scn.seed = seed;
    }
    let start = Instant::now();
    let outcome = run(&scn)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    outcome.write(&scn.output_dir)?;
    for c in &outcome.checks {
        match &c.reason {
            Some(r) => println!("{:<20} {:<22} {r}", c.check.name(), c.status.as_str()),
            None => println!("{:<20} {}", c.check.name(), c.status.as_str()),
        }
    }
    eprintln!("wrote {} in {:.1}s", scn.output_dir.display(), start.elapsed().as_secs_f64());
    Ok(if outcome.all_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_compare(first: PathBuf, second: PathBuf) -> Result<ExitCode> {
    let a = std::fs::read_to_string(&first).with_context(|| format!("reading {}", first.display()))?;
    let b = std::fs::read_to_string(&second).with_context(|| format!("reading {}", second.display()))?;
    let rows = compare_text(&a, &b)?;
    print!("{}", format_rows(&rows));
    Ok(if rows.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Run { scenario, output_dir, seed } => cmd_run(scenario, output_dir, seed),
        Command::Compare { first, second } => cmd_compare(first, second),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
