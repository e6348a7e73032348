use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use saddlerisk_cli::check::{outcome_table, run_all};
use saddlerisk_cli::config::{load, ConfigError, ExperimentKind};
use saddlerisk_cli::experiments::{run, RunError};
use saddlerisk_cli::table::Table;

const OK: u8 = 0;
const INVARIANT_FAILURE: u8 = 1;
const CONFIG_ERROR: u8 = 2;
const NUMERICAL_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "saddlerisk", version, about = "Saddlepoint risk contributions, sensitivities and vegas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write CSV.
    Run {
        config: PathBuf,
        /// Override [mc].seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override [mc].samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Override [experiment].output; `-` writes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suites.
    Check {
        /// Smaller sample sizes and grids.
        #[arg(long)]
        fast: bool,
    },
}

fn init_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("SADDLERISK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("SADDLERISK_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("cannot size the worker pool: {e}")))
}

fn write_table(table: &Table, out: Option<&Path>) -> io::Result<()> {
    match out {
        None => table.write_csv(io::stdout().lock()).map_err(io::Error::other),
        Some(p) if p == Path::new("-") => table.write_csv(io::stdout().lock()).map_err(io::Error::other),
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            table.write_csv(&mut w).map_err(io::Error::other)?;
            w.flush()
        }
    }
}

fn check(fast: bool, out: Option<&Path>) -> u8 {
    let outcomes = run_all(fast);
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    if let Some(p) = out {
        if let Err(e) = write_table(&outcome_table(&outcomes), Some(p)) {
            eprintln!("error: {}: {e}", p.display());
            return CONFIG_ERROR;
        }
    }
    if outcomes.iter().all(|o| o.passed) {
        OK
    } else {
        INVARIANT_FAILURE
    }
}

fn run_config(path: &Path, seed: Option<u64>, samples: Option<usize>, out: Option<PathBuf>) -> u8 {
    let mut cfg = match load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return CONFIG_ERROR;
        }
    };
    if let Some(s) = seed {
        cfg.mc.seed = s;
    }
    if let Some(n) = samples {
        cfg.mc.samples = n;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("config error: {e}");
        return CONFIG_ERROR;
    }
    let out = out.or_else(|| cfg.experiment.output.clone());
    if cfg.experiment.name == ExperimentKind::Check {
        return check(cfg.experiment.fast, out.as_deref());
    }
    let table = match run(&cfg) {
        Ok(t) => t,
        Err(e @ RunError::Config(_)) => {
            eprintln!("{e}");
            return CONFIG_ERROR;
        }
        Err(e @ RunError::Numerical(_)) => {
            eprintln!("{e}");
            return NUMERICAL_ERROR;
        }
    };
    let errors = table.error_count();
    if errors > 0 {
        eprintln!("warning: {errors} cells could not be computed (ERR:<code>)");
    }
    if let Err(e) = write_table(&table, out.as_deref()) {
        eprintln!("error: writing CSV: {e}");
        return CONFIG_ERROR;
    }
    OK
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("config error: {e}");
        return ExitCode::from(CONFIG_ERROR);
    }
    let code = match cli.command {
        Command::Run { config, seed, samples, out } => run_config(&config, seed, samples, out),
        Command::Check { fast } => check(fast, None),
    };
    ExitCode::from(code)
}
