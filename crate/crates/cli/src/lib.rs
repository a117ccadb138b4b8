//! `nlms`: runs the toolkit from a TOML config and writes rasters, CSV tables
//! and a JSON report into an output directory.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 the config or an input
//! was rejected, 3 an internal invariant broke.

pub mod config;
mod run;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{parse_config, Command, RunConfig};
pub use run::{execute, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nlms", version, about = "Lattice toolkit for s-minimal sets in cylinders")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Every problem found in the config, in document order.
    Config(Vec<String>),
    Core(nlms_core::Error),
}

impl From<nlms_core::Error> for CliError {
    fn from(e: nlms_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(nlms_core::Error::Invariant(_)) => EXIT_INVARIANT,
            _ => EXIT_CONFIG,
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Config(m) => m.clone(),
            CliError::Core(e) => vec![e.to_string()],
        }
    }
}

/// Reads and validates the config, then runs `command` with outputs in `out`
/// (or the config's `out`, or `out/` beside the config file).
pub fn run_with(command: Command, config_path: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", config_path.display())]))?;
    let cfg = parse_config(&text).map_err(CliError::Config)?;
    let missing = config::requirements(&cfg, command);
    if !missing.is_empty() {
        return Err(CliError::Config(missing));
    }
    let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_dir = match out {
        Some(p) => p.to_path_buf(),
        None => base.join(cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"))),
    };
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Core(e.into()))?;
    execute(command, &cfg, &base, &out_dir)
}

/// Full process behavior: parse arguments, run, print, return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_with(cli.command, &cli.config, cli.out.as_deref()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                EXIT_OK
            } else {
                for v in &outcome.failures {
                    eprintln!("FAIL: {v}");
                }
                EXIT_VERIFY
            }
        }
        Err(e) => {
            for m in e.messages() {
                eprintln!("error: {m}");
            }
            e.exit_code()
        }
    }
}
