//! Builds the physics objects from a configuration and dispatches the
//! requested method, running stochastic ensembles on a rayon pool in
//! fixed-size chunks so the result is bit-identical for any worker count.

use rayon::prelude::*;

use ctwa_core::auxmap::{build_map, AuxBathMap};
use ctwa_core::ensemble::{run_chunk, Accumulator, EnsembleParams, Method, TimeEstimate};
use ctwa_core::exact_qc::PseudoDensityTable;
use ctwa_core::kernels::{decompose, ExponentialKernel};
use ctwa_core::math::CMat;
use ctwa_core::model::{build_donor_acceptor, SystemModel};
use ctwa_core::oracles::{
    closed_system, heom_converged, pure_dephasing, site_projector, uniform_superposition,
};
use ctwa_core::wigner::LocalizedSampler;
use ctwa_core::Complex;

use crate::config::{MethodKind, RunConfig};
use crate::table_cache;

/// Failure classes mapped onto the process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Exit 1: bad configuration (message names the offending field).
    Config(String),
    /// Exit 2: numerical failure (non-convergent hierarchy, weight overflow,
    /// unrealizable kernel).
    Numerical(String),
    /// Exit 3: I/O failure.
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numerical(_) => 2,
            RunError::Io(_) => 3,
        }
    }
}

/// Everything a finished run hands to the output writers.
pub struct RunArtifacts {
    pub estimates: Vec<TimeEstimate>,
    pub kernels: Vec<ExponentialKernel>,
    pub maps: Vec<AuxBathMap>,
    pub heom_depth: Option<usize>,
    pub workers_used: usize,
}

fn config_err(msg: impl std::fmt::Display) -> RunError {
    RunError::Config(msg.to_string())
}

fn numerical_err(msg: impl std::fmt::Display) -> RunError {
    RunError::Numerical(msg.to_string())
}

/// Builds the system model from the configuration.
pub fn build_model(cfg: &RunConfig) -> Result<SystemModel, RunError> {
    let baths: Vec<_> = (0..cfg.n_sites)
        .map(|s| cfg.bath_for_site(s).to_spectral_density(cfg.temperature))
        .collect();
    for b in &baths {
        b.validate().map_err(config_err)?;
    }
    if let Some(rows) = &cfg.h_rows {
        let n = rows.len();
        let mut h = CMat::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(config_err(format!("h_row_{}: expected {n} entries", i + 1)));
            }
            for (j, &v) in row.iter().enumerate() {
                h[(i, j)] = Complex::new(v, 0.0);
            }
        }
        SystemModel::new(h, baths).map_err(config_err)
    } else if cfg.n_sites == 2 {
        let model = build_donor_acceptor(cfg.delta, cfg.h12, baths[0]).map_err(config_err)?;
        SystemModel::new(model.h().clone(), baths).map_err(config_err)
    } else {
        Err(config_err(
            "n_sites: models other than 2 sites need an explicit h matrix (h_row_k keys)",
        ))
    }
}

fn max_h_scale(model: &SystemModel) -> f64 {
    model.h().max_abs()
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| config_err(format!("workers: {e}")))
}

fn oracle_estimates(t_grid: &[f64], rho: Vec<CMat>) -> Vec<TimeEstimate> {
    t_grid
        .iter()
        .zip(rho)
        .map(|(&t, mean)| {
            let nn = mean.dim() * mean.dim();
            TimeEstimate {
                t,
                mean,
                se_re: vec![0.0; nn],
                se_im: vec![0.0; nn],
                avg_sign: 1.0,
                ess: 0.0,
                n_traj: 0,
            }
        })
        .collect()
}

/// Runs the configured method end to end.
pub fn execute(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    cfg.validate().map_err(config_err)?;
    let model = build_model(cfg)?;
    let kernels: Vec<ExponentialKernel> = model
        .baths()
        .iter()
        .map(|b| decompose(b, cfg.high_t, cfg.matsubara_l))
        .collect::<Result<_, _>>()
        .map_err(config_err)?;
    let t_grid = cfg.t_grid();
    let pool = build_pool(cfg.workers)?;
    let workers_used = pool.current_num_threads();

    if cfg.method == MethodKind::Heom && cfg.n_traj != RunConfig::default().n_traj {
        eprintln!("note: heom is deterministic; n_traj is ignored");
    }

    let mut maps = Vec::new();
    if cfg.method.is_stochastic() {
        maps = model
            .baths()
            .iter()
            .zip(&kernels)
            .map(|(b, k)| build_map(k, b))
            .collect::<Result<_, _>>()
            .map_err(numerical_err)?;
    }

    let estimates;
    let mut heom_depth = None;
    match cfg.method {
        MethodKind::Twa | MethodKind::Ctwa | MethodKind::Exact => {
            let sampler =
                LocalizedSampler::new(cfg.initial_site, model.n_sites()).map_err(config_err)?;
            let table = if cfg.method == MethodKind::Exact {
                let scale = max_h_scale(&model);
                if cfg.t_max * scale > 1.0 {
                    eprintln!(
                        "warning: exact scheme at t_max·|h|max = {:.2} > 1; weights will be \
                         enormous and may hit the overflow guard",
                        cfg.t_max * scale
                    );
                }
                Some(table_cache::load_or_build(
                    &cfg.table,
                    cfg.table_cache.as_deref(),
                    &pool,
                )?)
            } else {
                None
            };
            let method = match cfg.method {
                MethodKind::Twa => Method::Twa,
                MethodKind::Ctwa => Method::Ctwa,
                _ => Method::Exact,
            };
            let params = EnsembleParams {
                dt: cfg.dt,
                t_grid: t_grid.clone(),
                master_seed: cfg.seed,
            };
            estimates = run_parallel(
                method,
                &model,
                &maps,
                table.as_ref(),
                &sampler,
                &params,
                cfg.n_traj,
                &pool,
            )?;
        }
        MethodKind::Heom => {
            let rho0 = site_projector(model.n_sites(), cfg.initial_site);
            let (rho, depth) = heom_converged(
                &model,
                &kernels,
                &rho0,
                cfg.dt,
                &t_grid,
                cfg.heom_tol,
                cfg.heom_max_depth,
            )
            .map_err(numerical_err)?;
            heom_depth = Some(depth);
            estimates = oracle_estimates(&t_grid, rho);
        }
        MethodKind::DephasingOracle => {
            let rho0 = uniform_superposition(model.n_sites());
            let rho = pure_dephasing(&model, &kernels, &rho0, &t_grid)
                .map_err(|e| config_err(format!("h12: {e}")))?;
            estimates = oracle_estimates(&t_grid, rho);
        }
        MethodKind::Closed => {
            let rho0 = site_projector(model.n_sites(), cfg.initial_site);
            estimates = oracle_estimates(&t_grid, closed_system(&model, &rho0, &t_grid));
        }
    }

    Ok(RunArtifacts {
        estimates,
        kernels,
        maps,
        heom_depth,
        workers_used,
    })
}

/// How many trajectories one deterministic accumulation chunk covers.
pub const CHUNK_SIZE: u64 = 256;

/// Chunked parallel ensemble: chunk c always covers trajectories
/// [c·CHUNK_SIZE, …) and partials merge in chunk order, so the estimates do
/// not depend on the worker count or scheduling.
#[allow(clippy::too_many_arguments)]
pub fn run_parallel(
    method: Method,
    model: &SystemModel,
    maps: &[AuxBathMap],
    table: Option<&PseudoDensityTable>,
    sampler: &LocalizedSampler,
    params: &EnsembleParams,
    n_traj: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<TimeEstimate>, RunError> {
    let n_chunks = n_traj.div_ceil(CHUNK_SIZE);
    let chunks: Result<Vec<Accumulator>, ctwa_core::Error> = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK_SIZE;
                let count = CHUNK_SIZE.min(n_traj - start);
                run_chunk(method, model, maps, table, sampler, params, start, count)
            })
            .collect()
    });
    let chunks = chunks.map_err(|e| numerical_err(format!("trajectory failed: {e}")))?;
    let mut total = Accumulator::new(model.n_sites(), &params.t_grid);
    for chunk in &chunks {
        total.merge(chunk);
    }
    Ok(total.summarize())
}
