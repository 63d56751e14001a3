//! CSV results and the reproducibility metadata sidecar.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ctwa_core::ensemble::TimeEstimate;

use crate::config::RunConfig;
use crate::runner::RunArtifacts;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// CSV: `#`-prefixed header comments carrying the resolved-config digest,
/// then one row per time with re/im/se columns per density-matrix entry and
/// the average sign.
pub fn csv_text(cfg: &RunConfig, estimates: &[TimeEstimate]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ctwa {VERSION}");
    let _ = writeln!(s, "# digest = {}", cfg.digest());
    let _ = writeln!(
        s,
        "# method = {}, seed = {}, n_traj = {}, dt = {}",
        cfg.method.as_str(),
        cfg.seed,
        cfg.n_traj,
        cfg.dt
    );
    if let Some(p) = &cfg.preset {
        let _ = writeln!(s, "# preset = {p}");
    }
    let n = cfg.n_sites;
    let mut header = String::from("t");
    for i in 0..n {
        for j in 0..n {
            let name = format!("rho{}{}", i + 1, j + 1);
            let _ = write!(header, ",{name}_re,{name}_im,{name}_se");
        }
    }
    header.push_str(",avg_sign");
    let _ = writeln!(s, "{header}");
    for est in estimates {
        let _ = write!(s, "{}", est.t);
        for e in 0..n * n {
            let m = est.mean.data()[e];
            let se = est.se_re[e].hypot(est.se_im[e]);
            let _ = write!(s, ",{},{},{}", m.re, m.im, se);
        }
        let _ = writeln!(s, ",{}", est.avg_sign);
    }
    s
}

/// The metadata sidecar: the resolved configuration itself (parseable as a
/// config file), followed by informational sections with the kernel terms
/// and auxiliary-map coefficients of every bath.
pub fn metadata_text(cfg: &RunConfig, artifacts: &RunArtifacts, wall_seconds: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# run metadata; reusable as a config file");
    s.push_str(&cfg.to_text());
    let _ = writeln!(s, "\n[meta]");
    let _ = writeln!(s, "version = {VERSION}");
    let _ = writeln!(s, "digest = {}", cfg.digest());
    let _ = writeln!(s, "wall_time_s = {wall_seconds:.3}");
    let _ = writeln!(s, "workers_used = {}", artifacts.workers_used);
    if let Some(d) = artifacts.heom_depth {
        let _ = writeln!(s, "heom_converged_depth = {d}");
    }
    for (site, kernel) in artifacts.kernels.iter().enumerate() {
        let _ = writeln!(s, "\n[kernel.{}]", site + 1);
        let _ = writeln!(s, "matsubara_cutoff = {}", kernel.matsubara_cutoff);
        for (k, term) in kernel.terms.iter().enumerate() {
            let _ = writeln!(
                s,
                "term_{} = {} {} {} {} {} {} {}",
                k + 1,
                term.lambda.re,
                term.lambda.im,
                term.alpha_f.re,
                term.alpha_f.im,
                term.alpha_d.re,
                term.alpha_d.im,
                u8::from(term.matsubara)
            );
        }
    }
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (site, map) in artifacts.maps.iter().enumerate() {
        let _ = writeln!(s, "\n[auxmap.{}]", site + 1);
        let _ = writeln!(s, "dim = {}", map.dim());
        for i in 0..map.dim() {
            let _ = writeln!(s, "a_row_{} = {}", i + 1, join(map.a.row(i)));
        }
        let _ = writeln!(s, "v = {}", join(&map.v));
        let _ = writeln!(s, "eps = {}", join(&map.eps));
        let _ = writeln!(s, "b = {}", join(&map.b));
        let _ = writeln!(s, "b_tilde = {}", join(&map.b_tilde));
        let _ = writeln!(s, "kappa = {}", join(&map.kappa));
        for i in 0..map.dim() {
            let _ = writeln!(s, "sigma_row_{} = {}", i + 1, join(map.sigma.row(i)));
        }
    }
    s
}

pub fn write_outputs(
    cfg: &RunConfig,
    artifacts: &RunArtifacts,
    wall_seconds: f64,
) -> io::Result<()> {
    fs::write(&cfg.output, csv_text(cfg, &artifacts.estimates))?;
    let meta_path = sidecar_path(&cfg.output);
    fs::write(meta_path, metadata_text(cfg, artifacts, wall_seconds))
}

pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
    let mut p = output.as_os_str().to_os_string();
    p.push(".meta");
    std::path::PathBuf::from(p)
}
