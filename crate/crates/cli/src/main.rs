//! `randmeas`: batch front-end to the randomised-measurement toolbox.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::{CliError, CliResult, Ctx, FileConfig};
use report::Report;

#[derive(Parser, Debug)]
#[command(name = "randmeas", version, about = "Randomised-measurement toolbox: moments, entanglement criteria, shadows and Bell nonlocality")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Master seed; required by every stochastic run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores). Results do not depend on it.
    #[arg(long, global = true, env = "RANDMEAS_THREADS")]
    threads: Option<usize>,
    /// Emit a flat CSV table instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// TOML file with default parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moments of the correlation distribution, sector lengths, pseudo-Bloch moments.
    Moments(commands::MomentsArgs),
    /// Entanglement criteria, optionally from simulated finite data.
    Detect(commands::DetectArgs),
    /// Partial-transpose moments and the p3-PPT / p3-OPPT tests.
    Ptmoments(commands::PtArgs),
    /// Simulated measurement records, purity, fidelity and shadow estimates.
    Shadows(commands::ShadowArgs),
    /// Probability of violation, nonlocality strength, average correlation, MABK curve.
    Bell(commands::BellArgs),
    /// Canned reproductions with pass/fail against reference values.
    Reproduce(commands::ReproduceArgs),
}

fn run(cli: Cli) -> CliResult<bool> {
    let file = FileConfig::load(cli.global.config.as_deref())?;
    let threads = match cli.global.threads {
        Some(t) => Some(t),
        None => file.get::<usize>("", "threads")?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::validation("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::validation(e.to_string()))?;
    }
    let name = match &cli.command {
        Command::Moments(_) => "moments",
        Command::Detect(_) => "detect",
        Command::Ptmoments(_) => "ptmoments",
        Command::Shadows(_) => "shadows",
        Command::Bell(_) => "bell",
        Command::Reproduce(_) => "reproduce",
    };
    let mut ctx = Ctx::new(file, name);
    let seed = cli.global.seed;
    let start = Instant::now();
    let (rows, pass) = match cli.command {
        Command::Moments(a) => (commands::moments(&mut ctx, a, seed)?, None),
        Command::Detect(a) => (commands::detect(&mut ctx, a, seed)?, None),
        Command::Ptmoments(a) => (commands::ptmoments(&mut ctx, a, seed)?, None),
        Command::Shadows(a) => (commands::shadows(&mut ctx, a, seed)?, None),
        Command::Bell(a) => (commands::bell(&mut ctx, a, seed)?, None),
        Command::Reproduce(a) => {
            let (rows, pass) = commands::reproduce(&mut ctx, a, seed)?;
            (rows, Some(pass))
        }
    };
    let report = Report { command: name.to_string(), config: ctx.echo, rows, pass, seconds: start.elapsed().as_secs_f64() };
    let csv = cli.global.csv;
    let write = |w: &mut dyn io::Write| if csv { report.write_csv(w) } else { report.write_json(w) };
    match &cli.global.output {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?;
            write(&mut BufWriter::new(f))?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    Ok(pass.unwrap_or(true))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
