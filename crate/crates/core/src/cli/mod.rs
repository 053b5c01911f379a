//! The `codedcache` command line: `simulate`, `verify` and `sweep`.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;

pub mod simulate;
pub mod sweep;
pub mod verify;

pub const EXIT_OK: u8 = 0;
/// A decode, oracle or count check failed.
pub const EXIT_FAILURE: u8 = 1;
/// Bad flags or parameters.
pub const EXIT_USAGE: u8 = 2;
/// Writing output failed.
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "codedcache", version, about = "Coded caching simulator and rate/bound toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place, deliver and decode one demand.
    Simulate(SimulateArgs),
    /// Check every demand on a grid of system sizes.
    Verify(VerifyArgs),
    /// Export rate and bound curves as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of files.
    #[arg(short = 'N', long = "files")]
    pub files: usize,
    /// Number of users.
    #[arg(short = 'K', long = "users")]
    pub users: usize,
    /// Files mixed into each cached symbol.
    #[arg(short = 'g', long = "group")]
    pub group: usize,
    /// Requested file of each user, comma separated.
    #[arg(short = 'd', long = "demand", value_delimiter = ',', required = true)]
    pub demand: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub subfile_bytes: usize,
    /// Print a JSON report instead of text.
    #[arg(long)]
    pub json: bool,
    /// Skip the GF(2) span check.
    #[arg(long)]
    pub no_oracle: bool,
    /// List every message of the broadcast.
    #[arg(long)]
    pub messages: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    #[arg(long, default_value_t = 6)]
    pub k_max: usize,
    /// Skip grids with more than this many demands.
    #[arg(long, default_value_t = 4096)]
    pub cap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub subfile_bytes: usize,
    /// Remove the last broadcast message before decoding (negative control).
    #[arg(long)]
    pub drop_last: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Curve {
    New,
    Sota,
    Cutset,
    Stc,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(short = 'N', long = "files")]
    pub files: usize,
    #[arg(short = 'K', long = "users")]
    pub users: usize,
    /// Grid memories in [0, N/K], endpoints included.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, value_delimiter = ',', default_value = "new,sota,cutset,stc")]
    pub curves: Vec<Curve>,
    /// Add `p/q` columns next to the decimals.
    #[arg(long)]
    pub exact: bool,
    /// Output file; stdout when absent.
    #[arg(short = 'o', long = "output")]
    pub output: Option<std::path::PathBuf>,
}

/// Error of a subcommand, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::InvalidDemand(_) | Error::InvalidInput(_) | Error::OutOfDomain { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(&a, out),
        Command::Verify(a) => verify::run(&a, out),
        Command::Sweep(a) => sweep::run(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failed(msg)) => {
            let _ = writeln!(err, "failure: {msg}");
            EXIT_FAILURE
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "i/o error: {e}");
            EXIT_IO
        }
    }
}
