use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::kernels::ExponentialKernel;
use crate::math::CMat;
use crate::model::SystemModel;
use crate::{Complex, Error, Result};

/// One exponential bath-correlation term entering the hierarchy.
struct Term {
    site: usize,
    lambda: Complex,
    /// Coefficient of e^{λt} in C(t) = F/π − i·D/π.
    c: Complex,
    /// Coefficient of e^{λt} in C*(t); matched by exponent, not elementwise
    /// conjugated, so complex-pair kernels are handled correctly.
    c_tilde: Complex,
}

/// Hierarchy of auxiliary density operators, truncated at total tier
/// `depth`, with the multi-index arena flattened by combinatorial rank.
pub struct HeomHierarchy {
    n_sites: usize,
    depth: usize,
    terms: Vec<Term>,
    /// Σ_k n_k·λ_k per auxiliary operator.
    decay: Vec<Complex>,
    /// Flattened (ado, term) → upward neighbor rank, `u32::MAX` if absent.
    up: Vec<u32>,
    /// Flattened (ado, term) → downward neighbor rank, `u32::MAX` if absent.
    down: Vec<u32>,
    /// Multi-index values n_k per (ado, term).
    n_of: Vec<u32>,
}

const NONE: u32 = u32::MAX;

fn enumerate_indices(k: usize, depth: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut prefix = vec![0u32; k];
    fn rec(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, pos: usize, rem: usize) {
        if pos == prefix.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=rem {
            prefix[pos] = v as u32;
            rec(out, prefix, pos + 1, rem - v);
        }
        prefix[pos] = 0;
    }
    rec(&mut out, &mut prefix, 0, depth);
    out
}

impl HeomHierarchy {
    pub fn new(model: &SystemModel, kernels: &[ExponentialKernel], depth: usize) -> Result<Self> {
        let n_sites = model.n_sites();
        if kernels.len() != n_sites {
            return Err(Error::InvalidInput(
                "one kernel per site required".into(),
            ));
        }
        let mut terms = Vec::new();
        for (site, kernel) in kernels.iter().enumerate() {
            for t in &kernel.terms {
                terms.push(Term {
                    site,
                    lambda: t.lambda,
                    c: t.alpha_f - Complex::i() * t.alpha_d,
                    c_tilde: t.alpha_f + Complex::i() * t.alpha_d,
                });
            }
        }
        let k = terms.len();
        let indices = enumerate_indices(k, depth);
        let rank: BTreeMap<&[u32], u32> = indices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_slice(), i as u32))
            .collect();

        let n_ados = indices.len();
        let mut decay = Vec::with_capacity(n_ados);
        let mut up = vec![NONE; n_ados * k];
        let mut down = vec![NONE; n_ados * k];
        let mut n_of = vec![0u32; n_ados * k];
        let mut scratch = vec![0u32; k];
        for (a, idx) in indices.iter().enumerate() {
            let mut d = Complex::ZERO;
            for (kk, term) in terms.iter().enumerate() {
                d += idx[kk] as f64 * term.lambda;
                n_of[a * k + kk] = idx[kk];
                scratch.copy_from_slice(idx);
                scratch[kk] += 1;
                if scratch.iter().sum::<u32>() as usize <= depth {
                    up[a * k + kk] = rank[scratch.as_slice()];
                }
                if idx[kk] > 0 {
                    scratch[kk] -= 2;
                    down[a * k + kk] = rank[scratch.as_slice()];
                }
            }
            decay.push(d);
        }
        Ok(Self {
            n_sites,
            depth,
            terms,
            decay,
            up,
            down,
            n_of,
        })
    }

    pub fn n_ados(&self) -> usize {
        self.decay.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn derivative(&self, h: &CMat, state: &[Complex], out: &mut [Complex]) {
        let n = self.n_sites;
        let nn = n * n;
        let k = self.terms.len();
        for (a, &dec) in self.decay.iter().enumerate() {
            let rho = &state[a * nn..(a + 1) * nn];
            let d = &mut out[a * nn..(a + 1) * nn];
            // −i[H, ρ] + (Σ n_k λ_k)·ρ
            for i in 0..n {
                for j in 0..n {
                    let mut comm = Complex::ZERO;
                    for l in 0..n {
                        comm += h[(i, l)] * rho[l * n + j] - rho[i * n + l] * h[(l, j)];
                    }
                    d[i * n + j] = -Complex::i() * comm + dec * rho[i * n + j];
                }
            }
        }
        // Tier couplings: V_s = |s⟩⟨s| acts as a row/column selector.
        let mi = Complex::i() * -1.0;
        let pi = Complex::i();
        for a in 0..self.n_ados() {
            let d_base = a * nn;
            for (kk, term) in self.terms.iter().enumerate() {
                let s = term.site;
                let u = self.up[a * k + kk];
                if u != NONE {
                    let ru = &state[u as usize * nn..(u as usize + 1) * nn];
                    for j in 0..n {
                        out[d_base + s * n + j] += mi * ru[s * n + j];
                    }
                    for i in 0..n {
                        out[d_base + i * n + s] += pi * ru[i * n + s];
                    }
                }
                let dnb = self.down[a * k + kk];
                if dnb != NONE {
                    let nk = self.n_of[a * k + kk] as f64;
                    let rd = &state[dnb as usize * nn..(dnb as usize + 1) * nn];
                    let cf = mi * term.c * nk;
                    let cb = pi * term.c_tilde * nk;
                    for j in 0..n {
                        out[d_base + s * n + j] += cf * rd[s * n + j];
                    }
                    for i in 0..n {
                        out[d_base + i * n + s] += cb * rd[i * n + s];
                    }
                }
            }
        }
    }
}

/// Propagates the hierarchy with fixed-step RK4 from the factorized initial
/// condition (tier 0 = ρ₀, deeper tiers zero) and records the tier-0 matrix
/// at the grid times.
pub fn heom_propagate(
    model: &SystemModel,
    kernels: &[ExponentialKernel],
    rho0: &CMat,
    depth: usize,
    dt: f64,
    t_grid: &[f64],
) -> Result<Vec<CMat>> {
    let hier = HeomHierarchy::new(model, kernels, depth)?;
    let n = model.n_sites();
    let nn = n * n;
    let len = hier.n_ados() * nn;
    let steps = crate::propagators::grid_steps(t_grid, dt);

    let mut state = vec![Complex::ZERO; len];
    state[..nn].copy_from_slice(rho0.data());
    let mut k1 = vec![Complex::ZERO; len];
    let mut k2 = vec![Complex::ZERO; len];
    let mut k3 = vec![Complex::ZERO; len];
    let mut k4 = vec![Complex::ZERO; len];
    let mut tmp = vec![Complex::ZERO; len];
    let h = model.h();

    let mut records = Vec::with_capacity(t_grid.len());
    let mut record = |state: &[Complex]| {
        let mut rho = CMat::zeros(n);
        rho.data_mut().copy_from_slice(&state[..nn]);
        records.push(rho);
    };

    let mut step = 0u64;
    for &target in &steps {
        while step < target {
            hier.derivative(h, &state, &mut k1);
            for i in 0..len {
                tmp[i] = state[i] + 0.5 * dt * k1[i];
            }
            hier.derivative(h, &tmp, &mut k2);
            for i in 0..len {
                tmp[i] = state[i] + 0.5 * dt * k2[i];
            }
            hier.derivative(h, &tmp, &mut k3);
            for i in 0..len {
                tmp[i] = state[i] + dt * k3[i];
            }
            hier.derivative(h, &tmp, &mut k4);
            for i in 0..len {
                state[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
            }
            step += 1;
        }
        record(&state);
    }
    Ok(records)
}

/// Runs the hierarchy at increasing depth until the recorded density matrix
/// changes by less than `tol` between depth and depth+2, returning the
/// deeper result and the depth it was obtained at.
pub fn heom_converged(
    model: &SystemModel,
    kernels: &[ExponentialKernel],
    rho0: &CMat,
    dt: f64,
    t_grid: &[f64],
    tol: f64,
    max_depth: usize,
) -> Result<(Vec<CMat>, usize)> {
    let mut depth = 4.min(max_depth);
    let mut prev = heom_propagate(model, kernels, rho0, depth, dt, t_grid)?;
    loop {
        if depth + 2 > max_depth {
            return Err(Error::HeomNotConverged {
                depth,
                delta: f64::NAN,
            });
        }
        depth += 2;
        let next = heom_propagate(model, kernels, rho0, depth, dt, t_grid)?;
        let delta = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0f64, f64::max);
        if delta < tol {
            return Ok((next, depth));
        }
        if depth + 2 > max_depth {
            return Err(Error::HeomNotConverged { depth, delta });
        }
        prev = next;
    }
}
