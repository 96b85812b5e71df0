//! `agenet` — experiment runner: analytical solves, Monte Carlo simulation,
//! cross-validation, and stability-frontier scans, all emitting CSV.
//!
//! Exit codes: 0 success, 1 error, 2 validation-tolerance failure.

mod output;
mod runs;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable overriding the config path when --config is absent.
const CONFIG_ENV: &str = "AGENET_CONFIG";

#[derive(Parser)]
#[command(name = "agenet", version, about)]
struct Cli {
    /// Config file (flat key/value with [network]/[traffic]/[analysis]/[sim]
    /// sections); built-in defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOut {
    /// Output directory for CSV files.
    #[arg(long)]
    out: PathBuf,
    /// Number of QoS classes N.
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical TT solve over an optional (θ, T) grid.
    AnalyzeTt {
        #[command(flatten)]
        common: CommonOut,
        /// Detection thresholds in dB (comma separated).
        #[arg(long, value_delimiter = ',')]
        theta_db: Vec<f64>,
        /// Duty cycles T in slots.
        #[arg(long, value_delimiter = ',')]
        duty_cycle: Vec<u32>,
    },
    /// Analytical ET solve over an optional (θ, α) grid.
    AnalyzeEt {
        #[command(flatten)]
        common: CommonOut,
        #[arg(long, value_delimiter = ',')]
        theta_db: Vec<f64>,
        /// Per-slot arrival probabilities α.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
    },
    /// Slot-level Monte Carlo simulation of the configured traffic.
    Simulate {
        #[command(flatten)]
        common: CommonOut,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Number of spatial realizations (overrides the config).
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Run both the analytical and simulation paths and validate agreement.
    Compare {
        #[command(flatten)]
        common: CommonOut,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Kolmogorov-distance tolerance on the meta CCDF.
        #[arg(long, default_value_t = 0.08)]
        k_tol: f64,
        /// Relative tolerance on the overall PAoI.
        #[arg(long, default_value_t = 0.10)]
        paoi_tol: f64,
    },
    /// Per-class stability frontier over a (θ, load) grid.
    Frontier {
        #[command(flatten)]
        common: CommonOut,
        #[arg(long, value_delimiter = ',')]
        theta_db: Vec<f64>,
        /// TT duty-cycle grid (mutually exclusive with --alpha).
        #[arg(long, value_delimiter = ',')]
        duty_cycle: Vec<u32>,
        /// ET arrival-probability grid.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<agenet_core::ValidatedConfig> {
    let path = path
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let raw = match path {
        Some(p) => agenet_core::config::load_config(&p)
            .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?,
        None => {
            // bare defaults still need a traffic block; analyze/frontier
            // commands inject their sweep loads instead
            agenet_core::RawConfig { duty_cycle: Some(8), ..Default::default() }
        }
    };
    let cfg = raw.validate()?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::AnalyzeTt { common, theta_db, duty_cycle } => {
            let cfg = override_classes(cfg, &common);
            runs::analyze_tt(&cfg, &common.out, &theta_db, &duty_cycle)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::AnalyzeEt { common, theta_db, alpha } => {
            let cfg = override_classes(cfg, &common);
            runs::analyze_et(&cfg, &common.out, &theta_db, &alpha)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { common, seed, realizations } => {
            let mut cfg = override_classes(cfg, &common);
            if let Some(s) = seed {
                cfg.sim.seed = s;
            }
            if let Some(r) = realizations {
                cfg.sim.n_realizations = r;
            }
            if cfg.sim.n_realizations == 0 {
                anyhow::bail!("--realizations must be at least 1");
            }
            runs::simulate(&cfg, &common.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { common, seed, realizations, k_tol, paoi_tol } => {
            let mut cfg = override_classes(cfg, &common);
            if let Some(s) = seed {
                cfg.sim.seed = s;
            }
            if let Some(r) = realizations {
                cfg.sim.n_realizations = r;
            }
            if cfg.sim.n_realizations == 0 {
                anyhow::bail!("compare needs at least one simulation realization");
            }
            let passed = runs::compare(&cfg, &common.out, k_tol, paoi_tol)?;
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Frontier { common, theta_db, duty_cycle, alpha } => {
            let cfg = override_classes(cfg, &common);
            if theta_db.is_empty() {
                anyhow::bail!("frontier needs --theta-db");
            }
            match (duty_cycle.is_empty(), alpha.is_empty()) {
                (false, true) => runs::frontier_tt(&cfg, &common.out, &theta_db, &duty_cycle)?,
                (true, false) => runs::frontier_et(&cfg, &common.out, &theta_db, &alpha)?,
                _ => anyhow::bail!("frontier needs exactly one of --duty-cycle / --alpha"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn override_classes(
    mut cfg: agenet_core::ValidatedConfig,
    common: &CommonOut,
) -> agenet_core::ValidatedConfig {
    if let Some(n) = common.classes {
        cfg.analysis.n_classes = n.max(1);
    }
    cfg
}
