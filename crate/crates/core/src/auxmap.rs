//! Time-local auxiliary representation of a bath.
//!
//! Each bath's memory kernels are traded for a handful of damped, driven
//! variables φ with linear dynamics dφ = (A·φ + v·n)dt + B·dW and a readout
//! ε·φ that shifts the site energy. The matrices are chosen so that
//!
//! * εᵀ·e^{At}·v   = D(t)/π  (dissipation kernel), and
//! * εᵀ·e^{Aτ}·Σ·ε = F(τ)/π  (stationary part of the induced noise
//!   autocorrelation, with Σ the stationary covariance of the free φ
//!   process),
//!
//! which is the condition under which the auxiliary dynamics reproduces the
//! influence of the bath. Supported compositions: one 2×2 closed-form block
//! per spectral-density family (its high-temperature solution) plus one 1×1
//! block per Matsubara term; anything else fails verification and is
//! rejected.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::kernels::ExponentialKernel;
use crate::math::{cholesky_psd, lyapunov, RMat};
use crate::model::{BathFamily, Branch, SpectralDensity};
use crate::{Error, Result};

/// Auxiliary-mode realization of one bath.
#[derive(Clone, Debug)]
pub struct AuxBathMap {
    /// Drift matrix (block diagonal, Hurwitz).
    pub a: RMat,
    /// Drive vector coupling the site population into φ.
    pub v: Vec<f64>,
    /// Readout vector producing the site-energy shift εᵀφ.
    pub eps: Vec<f64>,
    /// Diagonal noise amplitudes (≥ 0).
    pub b: Vec<f64>,
    /// Sign-flipped noise amplitudes −sign(v_m)·b_m used by the corrected
    /// schemes; components with v_m = 0 keep +b_m so they stay bit-identical
    /// to the uncorrected dynamics.
    pub b_tilde: Vec<f64>,
    /// Stationary covariance of the free φ process.
    pub sigma: RMat,
    /// Quantum-correction amplitudes κ_m = √(|v_m|/(2 b_m)), zero where
    /// b_m = 0.
    pub kappa: Vec<f64>,
}

impl AuxBathMap {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn has_correction(&self) -> bool {
        self.kappa.iter().any(|&k| k > 0.0)
    }

    fn empty() -> Self {
        Self {
            a: RMat::zeros(0, 0),
            v: Vec::new(),
            eps: Vec::new(),
            b: Vec::new(),
            b_tilde: Vec::new(),
            sigma: RMat::zeros(0, 0),
            kappa: Vec::new(),
        }
    }

    /// εᵀ·e^{At} as a vector (the site-energy response row at time t).
    fn readout_row(&self, t: f64) -> Vec<f64> {
        self.a.scaled(t).expm().transpose().matvec(&self.eps)
    }
}

/// Stationary covariance Σ of dφ = Aφ dt + B dW, i.e. the solution of
/// A·Σ + Σ·Aᵀ + B·Bᵀ = 0. `b_diag` holds the diagonal of B.
pub fn stationary_covariance(a: &RMat, b_diag: &[f64]) -> Result<RMat> {
    let q = RMat::from_diag(&b_diag.iter().map(|x| x * x).collect::<Vec<_>>());
    lyapunov(a, &q)
}

/// Reconstruction residuals of a map against its kernel, relative to the
/// kernel's own scale on the probed grid.
#[derive(Clone, Copy, Debug)]
pub struct MapReport {
    pub d_residual: f64,
    pub d_worst_t: f64,
    pub f_residual: f64,
    pub f_worst_t: f64,
}

/// Checks that the map reproduces D(t)/π through εᵀe^{At}v and F(t)/π
/// through the stationary part εᵀe^{At}Σε on the given grid. Fails with the
/// worst offending time if either residual exceeds `tol` relative to the
/// kernel scale.
pub fn verify_map(
    map: &AuxBathMap,
    kernel: &ExponentialKernel,
    t_grid: &[f64],
    tol: f64,
) -> Result<MapReport> {
    let mut report = MapReport {
        d_residual: 0.0,
        d_worst_t: 0.0,
        f_residual: 0.0,
        f_worst_t: 0.0,
    };
    let mut d_scale = 0.0f64;
    let mut f_scale = 0.0f64;
    let mut d_res = 0.0f64;
    let mut f_res = 0.0f64;
    for &t in t_grid {
        let (d_map, f_map) = if map.dim() == 0 {
            (0.0, 0.0)
        } else {
            let row = map.readout_row(t);
            let d: f64 = row.iter().zip(&map.v).map(|(a, b)| a * b).sum();
            let sv = map.sigma.matvec(&map.eps);
            let f: f64 = row.iter().zip(&sv).map(|(a, b)| a * b).sum();
            (d, f)
        };
        let d_ref = kernel.eval_d(t);
        let f_ref = kernel.eval_f(t);
        d_scale = d_scale.max(d_ref.abs());
        f_scale = f_scale.max(f_ref.abs());
        let rd = (d_map - d_ref).abs();
        if rd > d_res {
            d_res = rd;
            report.d_worst_t = t;
        }
        let rf = (f_map - f_ref).abs();
        if rf > f_res {
            f_res = rf;
            report.f_worst_t = t;
        }
    }
    // Each residual is relative to its own kernel's scale; an identically
    // zero kernel falls back to the other's scale so that a silent map is
    // still required.
    let joint = d_scale.max(f_scale).max(f64::MIN_POSITIVE);
    report.d_residual = d_res / if d_scale > 0.0 { d_scale } else { joint };
    report.f_residual = f_res / if f_scale > 0.0 { f_scale } else { joint };
    if report.d_residual > tol {
        return Err(Error::MapVerification {
            kernel: "D",
            time: report.d_worst_t,
            residual: report.d_residual,
        });
    }
    if report.f_residual > tol {
        return Err(Error::MapVerification {
            kernel: "F",
            time: report.f_worst_t,
            residual: report.f_residual,
        });
    }
    Ok(report)
}

/// Relative tolerance enforced on every constructed map.
pub const MAP_TOLERANCE: f64 = 1e-8;

/// Builds the auxiliary map for a bath from its exponential kernel: the 2×2
/// closed-form block of the bath's family (high-temperature solution) plus
/// one 1×1 block per Matsubara term of the kernel. The result is always
/// checked with [`verify_map`] on t ∈ [0, 10/γ] before being returned, so
/// kernels outside the supported composition (e.g. exact-coth family
/// coefficients) are rejected rather than silently misrepresented.
pub fn build_map(kernel: &ExponentialKernel, bath: &SpectralDensity) -> Result<AuxBathMap> {
    bath.validate()?;
    if kernel.is_empty() {
        return Ok(AuxBathMap::empty());
    }
    let temperature = bath.temperature;
    let has_family = kernel.terms.iter().any(|t| !t.matsubara);
    let matsubara: Vec<_> = kernel.terms.iter().filter(|t| t.matsubara).collect();

    let fam = if has_family { 2 } else { 0 };
    let dim = fam + matsubara.len();
    let mut a = RMat::zeros(dim, dim);
    let mut v = vec![0.0; dim];
    let mut eps = vec![0.0; dim];
    let mut b = vec![0.0; dim];

    if has_family {
        let (gamma, w, drive, noise, eps0) = match bath.family {
            BathFamily::Underdamped {
                coupling,
                gamma,
                omega,
                branch,
            } => {
                let w2 = match branch {
                    Branch::Trig => gamma * gamma + omega * omega,
                    Branch::Hyp => gamma * gamma - omega * omega,
                };
                let w = w2.sqrt();
                (
                    gamma,
                    w,
                    -coupling * w,
                    (8.0 * temperature * gamma * coupling).sqrt(),
                    0.0,
                )
            }
            BathFamily::Drude { coupling, gamma } => (
                gamma,
                gamma,
                gamma * coupling,
                2.0 * (temperature * gamma * coupling).sqrt(),
                1.0,
            ),
        };
        a[(0, 1)] = w;
        a[(1, 0)] = -w;
        a[(1, 1)] = -2.0 * gamma;
        v[0] = drive;
        eps[0] = eps0;
        eps[1] = 1.0;
        b[0] = noise;
    }

    for (i, term) in matsubara.iter().enumerate() {
        let m = fam + i;
        debug_assert!(term.lambda.im == 0.0 && term.alpha_d == crate::Complex::ZERO);
        let nu = -term.lambda.re;
        let b2 = 2.0 * nu * term.alpha_f.re;
        if b2 < 0.0 {
            return Err(Error::UnrealizableKernel(alloc::format!(
                "Matsubara term at λ = {} has αF = {} < 0",
                term.lambda.re,
                term.alpha_f.re
            )));
        }
        a[(m, m)] = term.lambda.re;
        eps[m] = 1.0;
        b[m] = b2.sqrt();
    }

    // Σ is block diagonal; solve blockwise to keep the Lyapunov systems tiny.
    let mut sigma = RMat::zeros(dim, dim);
    if has_family {
        let a2 = RMat::from_rows(&[&[a[(0, 0)], a[(0, 1)]], &[a[(1, 0)], a[(1, 1)]]]);
        let s2 = stationary_covariance(&a2, &[b[0], b[1]])?;
        for i in 0..2 {
            for j in 0..2 {
                sigma[(i, j)] = s2[(i, j)];
            }
        }
    }
    for i in 0..matsubara.len() {
        let m = fam + i;
        sigma[(m, m)] = b[m] * b[m] / (-2.0 * a[(m, m)]);
    }

    let b_tilde: Vec<f64> = v
        .iter()
        .zip(&b)
        .map(|(&vm, &bm)| if vm > 0.0 { -bm } else { bm })
        .collect();
    let kappa: Vec<f64> = v
        .iter()
        .zip(&b)
        .map(|(&vm, &bm)| {
            if bm > 0.0 {
                (vm.abs() / (2.0 * bm)).sqrt()
            } else {
                0.0
            }
        })
        .collect();

    let map = AuxBathMap {
        a,
        v,
        eps,
        b,
        b_tilde,
        sigma,
        kappa,
    };

    let gamma = bath.gamma();
    let t_grid: Vec<f64> = (0..=160).map(|i| 10.0 / gamma * i as f64 / 160.0).collect();
    verify_map(&map, kernel, &t_grid, MAP_TOLERANCE)?;
    Ok(map)
}

/// Draws φ(0) from the stationary Gaussian with covariance Σ.
pub fn sample_phi0<R: Rng + ?Sized>(sigma: &RMat, rng: &mut R) -> Vec<f64> {
    let m = sigma.rows();
    let l = cholesky_psd(sigma, 1e-14).expect("covariance not PSD");
    let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let mut phi = vec![0.0; m];
    for i in 0..m {
        let mut s = 0.0;
        for j in 0..=i {
            s += l[(i, j)] * z[j];
        }
        phi[i] = s;
    }
    phi
}
