mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lcm_dilation::ando::AndoMode;
use lcm_dilation::sample::FamilyKind;
use lcm_dilation::MonoidSpec;

/// Exit code 1: the input is malformed or not a contractive representation.
/// Exit code 2: a positivity condition or verification check failed.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Structure(String),
    #[error("{0}")]
    Condition(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Structure(_) => 1,
            CliError::Condition(_) => 2,
        }
    }
}

impl From<lcm_dilation::Error> for CliError {
    fn from(e: lcm_dilation::Error) -> Self {
        use lcm_dilation::Error as E;
        match e {
            E::NotRegular { .. } | E::KernelInconsistent { .. } | E::NotRegularParent(_) | E::Precondition(_) => {
                CliError::Condition(e.to_string())
            }
            _ => CliError::Structure(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Cartesian,
    Free,
}

impl From<ModeArg> for AndoMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cartesian => AndoMode::Cartesian,
            ModeArg::Free => AndoMode::Free,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Polynomial,
    Diagonal,
    Independent,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Polynomial => FamilyKind::Polynomial,
            FamilyArg::Diagonal => FamilyKind::Diagonal,
            FamilyArg::Independent => FamilyKind::Independent,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lcmdil", version, about = "Dilations of representations of right LCM monoids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run config, representation file, or (for `verify`) a result file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Truncation radius.
    #[arg(long = "L", global = true)]
    pub radius: Option<usize>,

    /// Ampliation copies for `ando`; defaults to L.
    #[arg(long, global = true)]
    pub m: Option<usize>,

    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file (or directory for `sample --count` above 1).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a representation and test the positivity conditions.
    Check,
    /// Build the truncated minimal isometric dilation and verify it.
    Dilate,
    /// Ando-type dilation of (S1, S2, T) over NA(2) x P or NA(2) * P.
    Ando,
    /// Re-run the property suite on a `dilate` or `ando` output file.
    Verify,
    /// Write seeded random representations.
    Sample {
        #[arg(long)]
        monoid: Option<MonoidSpec>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_enum, default_value = "polynomial")]
        family: FamilyArg,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        norm_min: f64,
        #[arg(long, default_value_t = 0.9)]
        norm_max: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
