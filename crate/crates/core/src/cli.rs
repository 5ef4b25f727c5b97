//! Command-line front end.
//!
//! `simulate` runs the protocol as the parties see it, `analyze` runs it and
//! compares per-case rates with the exact oracle, `verify` runs the oracle
//! alone.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adversary::AttackStrategy;
use crate::analysis::exact_case_rates;
use crate::protocol::{
    run_protocol, ProtocolConfig, ProtocolError, Variant, DEFAULT_CHECK_FRACTION, DEFAULT_ERROR_THRESHOLD,
};
use crate::qstate::SourceState;
use crate::report::{self, Format, Mode, Report, ReportError};

#[derive(Debug, Parser)]
#[command(name = "sqss", version, about = "Two-particle semiquantum secret sharing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the protocol and report what the parties observe.
    Simulate(RunArgs),
    /// Run the protocol and compare per-case rates with the exact values.
    Analyze(RunArgs),
    /// Exact detection rates by branch enumeration.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Psi,
    Phi,
}

impl From<SourceArg> for SourceState {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Psi => SourceState::Psi,
            SourceArg::Phi => SourceState::Phi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Basic,
    Reorder,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    rounds: usize,
    /// Required; runs never draw entropy from the system.
    #[arg(long)]
    seed: u64,
    /// none, zz, xz, zx, xx, bell or cnot.
    #[arg(long, default_value = "none")]
    attack: AttackStrategy,
    #[arg(long, value_enum, default_value = "psi")]
    source: SourceArg,
    #[arg(long, value_enum, default_value = "basic")]
    variant: VariantArg,
    #[arg(long, default_value_t = DEFAULT_CHECK_FRACTION)]
    check_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_ERROR_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Omit to tabulate every built-in strategy.
    #[arg(long)]
    attack: Option<AttackStrategy>,
    #[arg(long, value_enum, default_value = "psi")]
    source: SourceArg,
    #[command(flatten)]
    out: OutputArgs,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub mode: Mode,
    /// `n_rounds` and `seed` are zero and unused in verify mode.
    pub config: ProtocolConfig,
    /// `None` only in verify mode, meaning every built-in strategy.
    pub strategy: Option<AttackStrategy>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Config(#[from] ProtocolError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

fn format_of(f: FormatArg) -> Format {
    match f {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    }
}

/// Parses a full argument vector, program name first.
pub fn parse_args<I, T>(argv: I) -> Result<RunSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let spec = match cli.command {
        Command::Simulate(a) => run_spec(Mode::Simulate, a),
        Command::Analyze(a) => run_spec(Mode::Analyze, a),
        Command::Verify(a) => RunSpec {
            mode: Mode::Verify,
            config: ProtocolConfig::new(0, 0).with_source(a.source.into()),
            strategy: a.attack,
            output_path: a.out.output,
            format: format_of(a.out.format),
        },
    };
    if spec.mode != Mode::Verify {
        spec.config.validate()?;
    }
    Ok(spec)
}

fn run_spec(mode: Mode, a: RunArgs) -> RunSpec {
    let variant = match a.variant {
        VariantArg::Basic => Variant::Basic,
        VariantArg::Reorder => Variant::Reorder,
    };
    RunSpec {
        mode,
        config: ProtocolConfig {
            check_fraction: a.check_fraction,
            error_threshold: a.threshold,
            ..ProtocolConfig::new(a.rounds, a.seed)
                .with_source(a.source.into())
                .with_variant(variant)
        },
        strategy: Some(a.attack),
        output_path: a.out.output,
        format: format_of(a.out.format),
    }
}

/// Produces the reports for a spec. A protocol abort is a normal result.
pub fn run(spec: &RunSpec) -> Result<Vec<Report>, CliError> {
    match spec.mode {
        Mode::Verify => {
            let strategies = match spec.strategy {
                Some(s) => vec![s],
                None => AttackStrategy::BUILTIN.to_vec(),
            };
            Ok(strategies
                .into_iter()
                .map(|s| report::verify_report(&exact_case_rates(s, spec.config.source)))
                .collect())
        }
        Mode::Simulate | Mode::Analyze => {
            let attack = spec.strategy.unwrap_or(AttackStrategy::NoAttack);
            let result = run_protocol(&spec.config, attack)?;
            Ok(vec![if spec.mode == Mode::Simulate {
                report::simulate_report(&result)
            } else {
                report::analyze_report(&result)
            }])
        }
    }
}

/// Runs a spec and writes the serialized report to its destination. The
/// digest goes to `log`.
pub fn execute(spec: &RunSpec, mut log: impl Write) -> Result<Vec<u8>, CliError> {
    let reports = run(spec)?;
    let bytes = report::emit_report(&reports, spec.format)?;
    match &spec.output_path {
        Some(path) => fs::write(path, &bytes).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?,
        None => io::stdout().write_all(&bytes).map_err(|source| CliError::Output {
            path: "<stdout>".into(),
            source,
        })?,
    }
    // The digest is a courtesy; a closed stderr is not an error.
    let _ = report::summary(&reports, &mut log);
    Ok(bytes)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let spec = match parse_args(argv) {
        Ok(spec) => spec,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match execute(&spec, io::stderr()) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
