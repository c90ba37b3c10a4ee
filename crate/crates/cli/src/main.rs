use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lifted_cli::demos::{run_demo, DemoOptions};
use lifted_cli::seed::DEFAULT_SEED;
use lifted_cli::{run_suite, HarnessError, Result, SuiteConfig};

#[derive(Parser)]
#[command(name = "lifted", version, about = "Seeded verification suites and demos for lifted geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and report per-case residuals.
    Verify {
        /// Suite name, or `all`.
        #[arg(long)]
        suite: Option<String>,
        /// Root seed; overrides LIFTED_SEED and the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// JSON config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Record wall time per case (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
        /// Print every case, not only failures.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Run a named end-to-end scenario.
    Demo {
        name: String,
        /// Rows of the Stokes refinement table.
        #[arg(long, default_value_t = 4)]
        refine: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the tables as CSV here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("LIFTED_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| HarnessError::usage(format!("LIFTED_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path.display().to_string(), e))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify { suite, seed, config, report, timings, verbose } => {
            let mut cfg = match &config {
                Some(p) => SuiteConfig::load(p)?,
                None => SuiteConfig::default(),
            };
            if let Some(s) = suite {
                cfg.suite = s;
            }
            if let Some(s) = seed.or(env_seed()?) {
                cfg.seed = s;
            }
            if report.is_some() {
                cfg.report = report;
            }
            let rep = run_suite(&cfg, timings)?;
            print!("{}", rep.to_text(verbose));
            if let Some(p) = &cfg.report {
                write(p, &rep.to_json())?;
            }
            Ok(rep.all_passed())
        }
        Command::Demo { name, refine, seed, report, dump } => {
            let seed = seed.or(env_seed()?).unwrap_or(DEFAULT_SEED);
            let out = run_demo(&name, &DemoOptions { seed, refine })?;
            print!("{}", out.text);
            if let Some(p) = &report {
                write(p, &out.report.to_json())?;
            }
            if let Some(p) = &dump {
                write(p, &out.csv)?;
            }
            Ok(out.report.all_passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
