//! Monte Carlo driver: runs the configured sweep and writes the CSV report.

use clap::Parser;
use noma_fran::config::{load_config, Scheme};
use noma_fran::harness::{render_csv, run_sweep};
use std::path::PathBuf;
use std::process::ExitCode;

/// NOMA fog-RAN resource-allocation simulator.
#[derive(Debug, Parser)]
#[command(name = "simulate", version, about)]
struct Args {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,

    /// Override the config `base_seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the config `n_drops`.
    #[arg(long)]
    drops: Option<usize>,

    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override the config `scheme` (noma|ofdma).
    #[arg(long)]
    scheme: Option<String>,

    /// Override the config `q` (per-subchannel quota).
    #[arg(long)]
    q: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let mut cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(drops) = args.drops {
        cfg.n_drops = drops;
    }
    if let Some(scheme) = &args.scheme {
        match scheme.parse::<Scheme>() {
            Ok(s) => cfg.scheme = s,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if let Some(q) = args.q {
        cfg.q = q;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("config error: {e}");
        return ExitCode::from(2);
    }

    let rows = match run_sweep(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("feasibility error: {e}");
            return ExitCode::from(3);
        }
    };
    let csv = render_csv(&rows);

    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
            eprintln!("wrote {} data rows to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}
