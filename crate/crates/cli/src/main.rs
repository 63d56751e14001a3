use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use ctwa_cli::config::{MethodKind, RunConfig};
use ctwa_cli::output;
use ctwa_cli::runner::{self, RunError};

/// Phase-space Monte Carlo for exciton transport in open quantum systems:
/// TWA, corrected TWA, the exact sign-weighted scheme, and deterministic
/// reference solvers (HEOM, pure dephasing, closed system).
#[derive(Parser, Debug)]
#[command(name = "ctwa", version, about)]
struct Cli {
    /// Config file (key = value with [bath] sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark preset name (e.g. fig2-g1-O01); applied before explicit
    /// keys and flags.
    #[arg(long)]
    preset: Option<String>,
    /// twa | ctwa | exact | heom | dephasing-oracle | closed.
    #[arg(long)]
    method: Option<String>,
    /// Number of stochastic trajectories.
    #[arg(long = "n-traj")]
    n_traj: Option<u64>,
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final recorded time.
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Number of recorded time points (including t = 0).
    #[arg(long = "n-times")]
    n_times: Option<usize>,
    /// Master seed; fixed seed means bit-identical output for any worker
    /// count.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores; default from CTWA_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Results CSV path (metadata sidecar goes to <output>.meta).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn resolve(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = RunConfig::default();
    if let Ok(w) = std::env::var("CTWA_WORKERS") {
        cfg.workers = w
            .parse()
            .map_err(|_| RunError::Config(format!("CTWA_WORKERS: cannot parse '{w}'")))?;
    }
    let file_text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(RunError::Io)?),
        None => None,
    };
    // A --preset flag wins over a preset named in the file; either way the
    // preset is the base that explicit file keys then override.
    if let Some(name) = &cli.preset {
        cfg.apply_preset(name).map_err(RunError::Config)?;
        if let Some(text) = &file_text {
            cfg.apply_text(&strip_preset_lines(text))
                .map_err(RunError::Config)?;
        }
    } else if let Some(text) = &file_text {
        cfg.apply_text(text).map_err(RunError::Config)?;
    }
    if let Some(m) = &cli.method {
        cfg.method = MethodKind::parse(m).map_err(RunError::Config)?;
    }
    if let Some(v) = cli.n_traj {
        cfg.n_traj = v;
    }
    if let Some(v) = cli.dt {
        cfg.dt = v;
    }
    if let Some(v) = cli.t_max {
        cfg.t_max = v;
    }
    if let Some(v) = cli.n_times {
        cfg.n_times = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.workers {
        cfg.workers = v;
    }
    if let Some(v) = &cli.output {
        cfg.output = v.clone();
    }
    Ok(cfg)
}

fn strip_preset_lines(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("preset"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn run() -> Result<(), RunError> {
    let cli = Cli::parse();
    let cfg = resolve(&cli)?;
    let start = Instant::now();
    let artifacts = runner::execute(&cfg)?;
    output::write_outputs(&cfg, &artifacts, start.elapsed().as_secs_f64())?;
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
