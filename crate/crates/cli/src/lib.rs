//! Argument parsing and dispatch for the `thermobit` binary.
//!
//! Exit codes: 0 when every check passes, 1 for usage, input or parse errors,
//! 2 when a checked property is violated.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod render;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;

/// Captured result of one invocation. Everything is buffered so that each
/// stream is written once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Outcome {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "thermobit", version, about = "Information and free-energy accounting over finite state spaces")]
pub struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    /// k_B = 1, energies in units of k_B T.
    Natural,
    /// k_B = 1.380649e-23 J/K.
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasurementArg {
    Szilard,
    Landauer,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct ThermalArgs {
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Boltzmann constant; overrides --units.
    #[arg(long)]
    pub kb: Option<f64>,
    #[arg(long, value_enum, default_value_t = UnitsArg::Natural)]
    pub units: UnitsArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check F(p) - F(pi) = kT D(p || pi) for a distribution.
    Check(CheckArgs),
    /// Audit D(p_t || pi) for monotone decrease under a channel.
    Audit(AuditArgs),
    /// Energy ledger of a single bit operation.
    Bitop(BitopArgs),
    /// Isothermal compression work of a one-molecule gas, with a convergence table.
    Szilard(SzilardArgs),
    /// Randomized sweeps over the core invariants.
    Sweep(SweepArgs),
    /// Work and information ledger of a measure-and-extract cycle.
    Demon(DemonArgs),
    /// Run the protocols of a document.
    Run(RunArgs),
    /// Print a document in canonical form.
    Fmt(FmtArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Document declaring the distribution.
    pub file: Option<PathBuf>,
    /// Name of a `dist` block in the document.
    pub dist: Option<String>,
    /// Inline state energies, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub energies: Option<Vec<f64>>,
    /// Inline probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub kb: Option<f64>,
    #[arg(long, value_enum)]
    pub units: Option<UnitsArg>,
    /// Relative tolerance for the identity residual.
    #[arg(long, default_value_t = thermobit::thermo::DEFAULT_IDENTITY_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub file: PathBuf,
    /// Name of a `channel` block.
    pub channel: String,
    /// Name of the starting `dist` block.
    pub p0: String,
    #[arg(long, default_value_t = 100, value_parser = parse_count)]
    pub steps: usize,
    /// Audit against this distribution instead of the stationary one.
    #[arg(long)]
    pub reference: Option<String>,
    /// Write the trajectory as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = thermobit::markov::MONOTONE_SLACK)]
    pub slack: f64,
}

#[derive(Debug, Args)]
pub struct BitopArgs {
    /// erase, copy-szilard, copy-landauer, not, switch-0-1, switch-1-0,
    /// randomize or randomize-first.
    pub op: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub thermal: ThermalArgs,
    /// Input distribution (2 entries for one bit, 4 for a pair indexed 2*b1 + b2);
    /// defaults to the operation's nominal input.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SzilardArgs {
    /// Compression ratio V_start / V_end.
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
    /// Midpoint subintervals for the finest row.
    #[arg(long, default_value_t = thermobit::engine::DEFAULT_STEPS, value_parser = parse_count)]
    pub steps: usize,
    /// Number of rows, halving the step count each time.
    #[arg(long, default_value_t = 5)]
    pub rows: usize,
    #[command(flatten)]
    pub thermal: ThermalArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = thermobit::sweep::DEFAULT_INSTANCES, value_parser = parse_count)]
    pub instances: usize,
    #[arg(long, default_value_t = thermobit::sweep::DEFAULT_MAX_STATES)]
    pub max_states: usize,
    /// Decimal or 0x-prefixed hexadecimal.
    #[arg(long, env = "THERMOBIT_SEED", default_value = "0xC0FFEE", value_parser = parse_seed)]
    pub seed: u64,
    /// Steps per chain in the monotonicity sweep.
    #[arg(long, default_value_t = thermobit::sweep::DEFAULT_AUDIT_STEPS, value_parser = parse_count)]
    pub audit_steps: usize,
    /// Corrupt one monotonicity instance so the sweep fails.
    #[arg(long)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct DemonArgs {
    #[arg(long, value_enum, default_value_t = MeasurementArg::Szilard)]
    pub measurement: MeasurementArg,
    #[command(flatten)]
    pub thermal: ThermalArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub file: PathBuf,
    /// Run only this protocol; by default all run in document order.
    #[arg(long)]
    pub protocol: Option<String>,
}

#[derive(Debug, Args)]
pub struct FmtArgs {
    pub file: PathBuf,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

/// Integer count, also accepting exact forms like `1e6`.
fn parse_count(s: &str) -> Result<usize, String> {
    let s = s.trim().replace('_', "");
    if let Ok(n) = s.parse() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 => Ok(x as usize),
        _ => Err(format!("expected a non-negative integer, got `{s}`")),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_PASS,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome::usage(text),
            };
        }
    };
    commands::dispatch(cli)
}
