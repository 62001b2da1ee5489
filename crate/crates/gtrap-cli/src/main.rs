//! Command-line front end for the Penning-trap g-factor simulator.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration or physics validation,
//! 3 numerical failure, 4 I/O.

mod commands;

use clap::{Parser, Subcommand, ValueEnum};
use gtrap::config::{load_config, parse_config, RunConfig};
use gtrap::output::OutputFormat;
use gtrap::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable naming a directory to search for configuration files
/// given by relative path.
const CONFIG_DIR_VAR: &str = "GTRAP_CONFIG_DIR";

#[derive(Parser)]
#[command(
    name = "gtrap",
    version,
    about = "Single-(anti)proton g-factor measurements in Penning traps: \
             classical continuous Stern-Gerlach detection versus a \
             quantum-logic protocol, under realistic field drift."
)]
struct Cli {
    /// Configuration file (TOML). Relative paths are also searched in
    /// $GTRAP_CONFIG_DIR. Omit to run with built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for generated files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Tabular output format. Summary files are always JSON; the campaign
    /// shot log is always CSV.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Report the trap eigenfrequencies for a species in a zone.
    Modes {
        /// Species name (defaults to the campaign species).
        #[arg(long)]
        species: Option<String>,
        /// Zone name (defaults to the campaign precision zone).
        #[arg(long)]
        zone: Option<String>,
    },
    /// Check the frequency-sum identity on randomized imperfect traps.
    InvarianceCheck {
        /// Number of randomized traps to test.
        #[arg(long, default_value_t = 1000)]
        count: u32,
        /// Maximum tolerated relative residual.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Simulate the coupled-well motional quantum exchange.
    Exchange {
        /// Time grid resolution of the population history.
        #[arg(long, default_value_t = 200)]
        steps: u32,
        /// History length in units of the swap time.
        #[arg(long, default_value_t = 2.0)]
        swaps: f64,
    },
    /// Monte Carlo the spin-to-fluorescence readout chain.
    ReadoutSim {
        /// Trials per initial spin state.
        #[arg(long, default_value_t = 10000)]
        shots: u64,
    },
    /// Analyze the continuous Stern-Gerlach detection baseline.
    ClassicalBaseline,
    /// Print the fully resolved configuration as canonical TOML.
    ConfigShow,
    /// Run the configured measurement campaign.
    Campaign,
    /// Rerun a subcommand across a list of values for one parameter.
    Sweep {
        /// Subcommand to rerun for each value.
        #[arg(long, value_enum)]
        target: SweepTarget,
        /// Dotted configuration path to vary, e.g. double_well.separation_m.
        #[arg(long)]
        param: String,
        /// Comma-separated values (parsed as int, float, bool, or string).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepTarget {
    Modes,
    Exchange,
    ReadoutSim,
    ClassicalBaseline,
    Campaign,
}

impl SweepTarget {
    fn name(self) -> &'static str {
        match self {
            SweepTarget::Modes => "modes",
            SweepTarget::Exchange => "exchange",
            SweepTarget::ReadoutSim => "readout_sim",
            SweepTarget::ClassicalBaseline => "classical_baseline",
            SweepTarget::Campaign => "campaign",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive here as non-error kinds.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::UnstableTrap(_) | Error::Config(_) | Error::Alignment(_) => 2,
        Error::Truncation(_) | Error::Estimation(_) | Error::Numerical(_) => 3,
        Error::Io(_) => 4,
    }
}

/// Resolve a --config argument: the path itself, then relative to
/// $GTRAP_CONFIG_DIR.
fn resolve_config_path(given: &Path) -> Result<PathBuf> {
    if given.exists() {
        return Ok(given.to_path_buf());
    }
    if given.is_relative() {
        if let Ok(dir) = std::env::var(CONFIG_DIR_VAR) {
            let candidate = Path::new(&dir).join(given);
            if candidate.exists() {
                return Ok(candidate);
            }
        }
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!(
            "configuration file {} not found (also searched ${CONFIG_DIR_VAR})",
            given.display()
        ),
    )))
}

/// Load the configuration text the run is based on. Sweeps re-parse this
/// text with one parameter substituted per run.
fn base_config_text(cli: &Cli) -> Result<String> {
    match &cli.config {
        None => Ok(String::new()),
        Some(path) => {
            let resolved = resolve_config_path(path)?;
            Ok(std::fs::read_to_string(resolved)?)
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        None => parse_config("")?,
        Some(path) => load_config(&resolve_config_path(path)?)?,
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
        cfg.defaulted.retain(|p| p != "master_seed");
    }
    if !cfg.defaulted.is_empty() {
        let shown = cfg.defaulted.iter().take(6).cloned().collect::<Vec<_>>();
        let rest = cfg.defaulted.len() - shown.len();
        let tail = if rest > 0 {
            format!(", and {rest} more")
        } else {
            String::new()
        };
        eprintln!(
            "note: {} configuration field(s) defaulted: {}{tail}",
            cfg.defaulted.len(),
            shown.join(", ")
        );
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    let format = OutputFormat::from(cli.format);
    match &cli.command {
        Command::Modes { species, zone } => {
            let cfg = load(&cli)?;
            commands::modes(&cfg, species.as_deref(), zone.as_deref(), &cli.out, format, "modes")
                .map(drop)
        }
        Command::InvarianceCheck { count, tolerance } => {
            let cfg = load(&cli)?;
            commands::invariance_check(&cfg, *count, *tolerance, &cli.out)
        }
        Command::Exchange { steps, swaps } => {
            let cfg = load(&cli)?;
            commands::exchange(&cfg, *steps, *swaps, &cli.out, format, "exchange").map(drop)
        }
        Command::ReadoutSim { shots } => {
            let cfg = load(&cli)?;
            commands::readout_sim(&cfg, *shots, &cli.out, format, "readout").map(drop)
        }
        Command::ClassicalBaseline => {
            let cfg = load(&cli)?;
            commands::classical_baseline(&cfg, &cli.out, format, "classical").map(drop)
        }
        Command::ConfigShow => {
            let cfg = load(&cli)?;
            print!("{}", cfg.to_canonical_toml()?);
            Ok(())
        }
        Command::Campaign => {
            let cfg = load(&cli)?;
            commands::campaign(&cfg, &cli.out, format, "campaign").map(drop)
        }
        Command::Sweep {
            target,
            param,
            values,
        } => {
            let base_text = base_config_text(&cli)?;
            commands::sweep(
                &base_text, *target, param, values, cli.seed, &cli.out, format,
            )
        }
    }
}
