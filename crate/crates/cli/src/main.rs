//! `rmp` — scenario runner for robust-mixture-prior hybrid-control designs.
//!
//! Subcommands: `oc`, `table1`, `elicit`, `theorem-check`, `mc-check`,
//! `levelset`. Exit codes: 0 success, 1 property/tolerance failure,
//! 2 usage/config error, 3 numerical non-convergence.

// validation guards are written as negated comparisons so NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rmp_core::numerics::NumericsError;
use rmp_core::oc::OcError;
use rmp_core::QuadratureSpec;

mod commands;
mod config;
mod fmt;

/// Reference configuration shipped with the tool (also at
/// `configs/illustrative.toml` in the repository).
const DEFAULT_CONFIG: &str = include_str!("../../../configs/illustrative.toml");

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    NonConvergence(String),
    Io(String),
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Io(m) => write!(f, "{m}"),
            CliError::NonConvergence(m) => write!(f, "numerical non-convergence: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<OcError> for CliError {
    fn from(e: OcError) -> Self {
        match e {
            OcError::Numerics(NumericsError::NonConvergence { .. }) => {
                CliError::NonConvergence(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rmp",
    version,
    about = "Robust-mixture-prior design toolkit for hybrid-control trials"
)]
struct Cli {
    /// Scenario configuration (TOML); the bundled reference configuration
    /// is used when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write results here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Absolute quadrature tolerance
    #[arg(long, global = true, default_value_t = 1e-8)]
    quad_tol: f64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type I error, power and mean posterior weight per (scenario, drift)
    Oc,
    /// Operating-characteristics table of the bundled reference designs
    Table1 {
        /// Lower edge of the flat design prior behind the vague-average
        /// column
        #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
        vag_lo: f64,
        /// Upper edge of the same
        #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
        vag_hi: f64,
        /// Comma-separated row indices (0 = no-borrowing baseline) to
        /// compute; all eight by default
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
    },
    /// Prior weight from an equipoise drift
    Elicit {
        /// Observed control response (offset from the informative mean) at
        /// which historical relevance is a coin flip
        #[arg(long, allow_hyphen_values = true)]
        d_star: f64,
        /// Robustification SD as a multiple of the endpoint SD
        #[arg(long, default_value_t = 1000.0)]
        sigma_rob_multiple: f64,
    },
    /// Run the executable property suites (all theorems by default)
    TheoremCheck {
        #[arg(long)]
        theorem: Option<u8>,
    },
    /// Cross-check quadrature values against the Monte Carlo oracle
    McCheck {
        #[arg(long, default_value_t = 1_000_000)]
        reps: u64,
        #[arg(long, default_value_t = 20_240_815)]
        seed: u64,
    },
    /// Weights matching one borrowing strength across robustification sizes
    Levelset {
        /// Borrowing strength to hold fixed; defaults to the strength of
        /// the first configured scenario
        #[arg(long)]
        strength: Option<f64>,
        /// Robustification effective sample sizes (comma-separated);
        /// defaults to sweep.levelset_n0 from the configuration
        #[arg(long, value_delimiter = ',')]
        n0: Option<Vec<f64>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a later duplicate initialisation (e.g. in tests) is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if !(cli.quad_tol > 0.0) {
        return Err(CliError::Usage("--quad-tol must be positive".into()));
    }
    let quad = QuadratureSpec {
        abs_tol: cli.quad_tol,
        ..QuadratureSpec::default()
    };
    let config_text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let cfg = config::Config::parse(&config_text)?;

    let (output, code) = match cli.cmd {
        Command::Oc => (commands::oc(&cfg, &quad)?, 0),
        Command::Table1 {
            vag_lo,
            vag_hi,
            rows,
        } => (commands::table1(vag_lo, vag_hi, rows.as_deref(), &quad)?, 0),
        Command::Elicit {
            d_star,
            sigma_rob_multiple,
        } => commands::elicit(&cfg, d_star, sigma_rob_multiple)?,
        Command::TheoremCheck { theorem } => commands::theorem_check(theorem, &quad)?,
        Command::McCheck { reps, seed } => commands::mc_check(&cfg, reps, seed, &quad)?,
        Command::Levelset { strength, n0 } => {
            (commands::levelset(&cfg, strength, n0.as_deref())?, 0)
        }
    };

    let sink: Option<PathBuf> = cli
        .out
        .clone()
        .or_else(|| cfg.output.path.clone().map(PathBuf::from));
    match sink {
        Some(path) => std::fs::write(&path, output)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{output}"),
    }
    Ok(code)
}
