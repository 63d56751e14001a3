//! Euler-Maruyama trajectory propagation for the two semiclassical schemes.
//!
//! The TWA evolves the amplitude vector ψ under the fluctuating Hamiltonian
//! h̃(t) = h − diag[ε¹·φ¹, …] while each bath's auxiliary modes are driven
//! by the site populations. The corrected scheme (CTWA) instead evolves the
//! matrix R = ψψ† and adds a diagonal noise κ_m²·dW on the initially driven
//! sites,*sharing* the Wiener increments with the φ update — it is this
//! correlation with the bath memory that carries the quantum correction.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::auxmap::{sample_phi0, AuxBathMap};
use crate::math::CMat;
use crate::model::SystemModel;
use crate::wigner::WignerSample;
use crate::Complex;

/// Which semiclassical scheme a trajectory runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemiMethod {
    Twa,
    Ctwa,
}

/// TWA trajectory state: amplitudes plus one auxiliary vector per bath.
#[derive(Clone, Debug)]
pub struct TwaState {
    pub psi: Vec<Complex>,
    pub phi: Vec<Vec<f64>>,
    pub t: f64,
    psi_next: Vec<Complex>,
    drift: Vec<f64>,
    shifts: Vec<f64>,
}

impl TwaState {
    pub fn new(psi: Vec<Complex>, phi: Vec<Vec<f64>>) -> Self {
        let n = psi.len();
        let m_max = phi.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            psi,
            phi,
            t: 0.0,
            psi_next: vec![Complex::ZERO; n],
            drift: vec![0.0; m_max],
            shifts: vec![0.0; n],
        }
    }
}

/// CTWA trajectory state: the Hermitian matrix R = ψψ† plus auxiliaries.
#[derive(Clone, Debug)]
pub struct CtwaState {
    pub r: CMat,
    pub phi: Vec<Vec<f64>>,
    pub t: f64,
    /// Running Σ κ_m²·dW accumulated by the correction noise; the trace of
    /// R moves by exactly this amount (plus roundoff in the commutator).
    pub noise_trace: f64,
    hr: CMat,
    drift: Vec<f64>,
    diag: Vec<f64>,
    shifts: Vec<f64>,
}

impl CtwaState {
    pub fn new(r: CMat, phi: Vec<Vec<f64>>) -> Self {
        let n = r.dim();
        let m_max = phi.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            r,
            phi,
            t: 0.0,
            noise_trace: 0.0,
            hr: CMat::zeros(n),
            drift: vec![0.0; m_max],
            diag: vec![0.0; n],
            shifts: vec![0.0; n],
        }
    }

    pub fn from_psi(psi: &[Complex], phi: Vec<Vec<f64>>) -> Self {
        let n = psi.len();
        let mut r = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Self::new(r, phi)
    }
}

/// Site-energy shifts ε·φ of every bath, written into `out`.
fn energy_shifts(maps: &[AuxBathMap], phi: &[Vec<f64>], out: &mut [f64]) {
    for (n, map) in maps.iter().enumerate() {
        out[n] = map
            .eps
            .iter()
            .zip(&phi[n])
            .map(|(e, p)| e * p)
            .sum::<f64>();
    }
}

/// One Euler-Maruyama step of the TWA equations. Per bath, the noise
/// consumes exactly `dim` standard normals, in site order.
pub fn twa_step<R: Rng + ?Sized>(
    state: &mut TwaState,
    maps: &[AuxBathMap],
    h: &CMat,
    dt: f64,
    rng: &mut R,
) {
    debug_assert!(dt > 0.0);
    let n = state.psi.len();
    let sqrt_dt = dt.sqrt();

    energy_shifts(maps, &state.phi, &mut state.shifts);

    // ψ ← ψ − i·h̃ψ·dt with h̃ = h − diag(shifts).
    for i in 0..n {
        let mut y = Complex::ZERO;
        for (hij, psj) in h.row(i).iter().zip(&state.psi) {
            y += hij * psj;
        }
        y -= state.shifts[i] * state.psi[i];
        state.psi_next[i] = state.psi[i] - Complex::i() * y * dt;
    }

    // φⁿ ← φⁿ + (Aφⁿ + vⁿ·2|ψ_n|²)dt + Bⁿ·√dt·ξⁿ, using the pre-step ψ.
    for (nn, map) in maps.iter().enumerate() {
        let m = map.dim();
        if m == 0 {
            continue;
        }
        let pop2 = 2.0 * state.psi[nn].norm_sqr();
        map.a.matvec_into(&state.phi[nn], &mut state.drift[..m]);
        for mm in 0..m {
            let xi: f64 = rng.sample(StandardNormal);
            state.phi[nn][mm] +=
                (state.drift[mm] + map.v[mm] * pop2) * dt + map.b[mm] * sqrt_dt * xi;
        }
    }

    core::mem::swap(&mut state.psi, &mut state.psi_next);
    state.t += dt;
}

/// One Euler-Maruyama step of the corrected scheme. Draws the same count of
/// normals in the same order as [`twa_step`]; each increment dW feeds both
/// the diagonal κκᵀ noise of R and the (sign-flipped) φ noise.
pub fn ctwa_step<R: Rng + ?Sized>(
    state: &mut CtwaState,
    maps: &[AuxBathMap],
    h: &CMat,
    dt: f64,
    rng: &mut R,
) {
    debug_assert!(dt > 0.0);
    let n = state.r.dim();
    let sqrt_dt = dt.sqrt();

    energy_shifts(maps, &state.phi, &mut state.shifts);
    for i in 0..n {
        state.diag[i] = state.r[(i, i)].re;
    }

    // C = h̃·R; R ← R − i(C − C†)·dt keeps R exactly Hermitian.
    for i in 0..n {
        for j in 0..n {
            let mut y = Complex::ZERO;
            for (hik, rkj) in h.row(i).iter().zip(state.r.data()[j..].iter().step_by(n)) {
                y += hik * rkj;
            }
            y -= state.shifts[i] * state.r[(i, j)];
            state.hr[(i, j)] = y;
        }
    }
    for i in 0..n {
        for j in i..n {
            let c = state.hr[(i, j)];
            let cdag = state.hr[(j, i)].conj();
            let m = -Complex::i() * (c - cdag) * dt;
            state.r[(i, j)] += m;
            if j > i {
                state.r[(j, i)] += m.conj();
            }
        }
    }

    // Shared increments: the κ-noise on the diagonal of R and the φ noise
    // use the same dW per auxiliary component.
    for (nn, map) in maps.iter().enumerate() {
        let m = map.dim();
        if m == 0 {
            continue;
        }
        let pop2 = 2.0 * state.diag[nn];
        map.a.matvec_into(&state.phi[nn], &mut state.drift[..m]);
        for mm in 0..m {
            let xi: f64 = rng.sample(StandardNormal);
            let dw = sqrt_dt * xi;
            let k = map.kappa[mm];
            if k > 0.0 {
                let bump = k * k * dw;
                state.r[(nn, nn)] += bump;
                state.noise_trace += bump;
            }
            state.phi[nn][mm] +=
                (state.drift[mm] + map.v[mm] * pop2) * dt + map.b_tilde[mm] * dw;
        }
    }

    state.t += dt;
}

/// Per-trajectory record at the requested grid times: the Weyl observable
/// matrix (ψψ† − 1/2 or R − 1/2), the trajectory weight, and its sign.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub weyl: Vec<CMat>,
    pub weights: Vec<f64>,
    pub signs: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn with_capacity(n_sites: usize, n_times: usize) -> Self {
        Self {
            times: vec![0.0; n_times],
            weyl: vec![CMat::zeros(n_sites); n_times],
            weights: vec![0.0; n_times],
            signs: vec![0.0; n_times],
        }
    }
}

/// Maps grid times onto integer step counts, enforcing that each one is a
/// multiple of dt (to within rounding) and that the grid ascends.
pub(crate) fn grid_steps(t_grid: &[f64], dt: f64) -> Vec<u64> {
    let mut steps = Vec::with_capacity(t_grid.len());
    let mut last = 0u64;
    for (i, &t) in t_grid.iter().enumerate() {
        let s = (t / dt).round();
        assert!(
            (s * dt - t).abs() <= 1e-9 * (t.abs() + dt),
            "grid time {t} is not a multiple of dt = {dt}"
        );
        let s = s as u64;
        assert!(i == 0 || s >= last, "grid times must ascend");
        steps.push(s);
        last = s;
    }
    steps
}

fn record_twa(rec: &mut TrajectoryRecord, k: usize, state: &TwaState, weight: f64, sign: f64) {
    let n = state.psi.len();
    let weyl = &mut rec.weyl[k];
    for i in 0..n {
        for j in 0..n {
            let mut w = state.psi[i] * state.psi[j].conj();
            if i == j {
                w -= 0.5;
            }
            weyl[(i, j)] = w;
        }
    }
    rec.times[k] = state.t;
    rec.weights[k] = weight;
    rec.signs[k] = sign;
}

fn record_ctwa(rec: &mut TrajectoryRecord, k: usize, state: &CtwaState, weight: f64, sign: f64) {
    let n = state.r.dim();
    let weyl = &mut rec.weyl[k];
    for i in 0..n {
        for j in 0..n {
            let mut w = state.r[(i, j)];
            if i == j {
                w -= 0.5;
            }
            weyl[(i, j)] = w;
        }
    }
    rec.times[k] = state.t;
    rec.weights[k] = weight;
    rec.signs[k] = sign;
}

/// Runs one trajectory from a Wigner sample, recording the weighted Weyl
/// observable at each grid time. φ(0) is drawn bath by bath from the
/// stationary distribution before stepping starts.
pub fn run_trajectory<R: Rng + ?Sized>(
    method: SemiMethod,
    model: &SystemModel,
    maps: &[AuxBathMap],
    sample: &WignerSample,
    dt: f64,
    t_grid: &[f64],
    rng: &mut R,
) -> TrajectoryRecord {
    let mut rec = TrajectoryRecord::with_capacity(model.n_sites(), t_grid.len());
    run_trajectory_into(method, model, maps, sample, dt, t_grid, rng, &mut rec);
    rec
}

/// Allocation-free variant of [`run_trajectory`] for ensemble loops.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory_into<R: Rng + ?Sized>(
    method: SemiMethod,
    model: &SystemModel,
    maps: &[AuxBathMap],
    sample: &WignerSample,
    dt: f64,
    t_grid: &[f64],
    rng: &mut R,
    rec: &mut TrajectoryRecord,
) {
    assert_eq!(maps.len(), model.n_sites());
    let steps = grid_steps(t_grid, dt);
    let weight = sample.sign * sample.norm;
    let phi0: Vec<Vec<f64>> = maps.iter().map(|m| sample_phi0(&m.sigma, rng)).collect();
    let h = model.h();

    match method {
        SemiMethod::Twa => {
            let mut state = TwaState::new(sample.psi0.clone(), phi0);
            let mut step = 0u64;
            for (k, &target) in steps.iter().enumerate() {
                while step < target {
                    twa_step(&mut state, maps, h, dt, rng);
                    step += 1;
                }
                record_twa(rec, k, &state, weight, sample.sign);
            }
        }
        SemiMethod::Ctwa => {
            let mut state = CtwaState::from_psi(&sample.psi0, phi0);
            let mut step = 0u64;
            for (k, &target) in steps.iter().enumerate() {
                while step < target {
                    ctwa_step(&mut state, maps, h, dt, rng);
                    step += 1;
                }
                record_ctwa(rec, k, &state, weight, sample.sign);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auxmap::build_map;
    use crate::kernels::decompose;
    use crate::model::{build_donor_acceptor, Branch, SpectralDensity};
    use crate::wigner::LocalizedSampler;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn closed_model() -> SystemModel {
        let bath = SpectralDensity::drude(0.0, 1.0, 2.0).unwrap();
        build_donor_acceptor(1.0, 0.4, bath).unwrap()
    }

    fn fig2_setup() -> (SystemModel, Vec<AuxBathMap>) {
        let bath = SpectralDensity::underdamped(0.1, 1.0, 0.1, Branch::Trig, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.4, bath).unwrap();
        let kernel = decompose(&bath, true, 0).unwrap();
        let map = build_map(&kernel, &bath).unwrap();
        (model, vec![map.clone(), map])
    }

    fn empty_maps() -> Vec<AuxBathMap> {
        let bath = SpectralDensity::drude(0.0, 1.0, 2.0).unwrap();
        let kernel = decompose(&bath, true, 0).unwrap();
        let map = build_map(&kernel, &bath).unwrap();
        vec![map.clone(), map]
    }

    #[test]
    fn free_phase_rotation_for_diagonal_h() {
        // a′ = 0 and diagonal h: ψ_n(t) = e^{−i·h_nn·t}·ψ_n(0) up to the
        // deterministic Euler norm factor (1 + dt²h_nn²)^{steps/2}.
        let bath = SpectralDensity::drude(0.0, 1.0, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.0, bath).unwrap();
        let maps = empty_maps();
        let dt = 1e-3;
        let steps = 1000;
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mut state = TwaState::new(
            vec![Complex::new(0.8, 0.1), Complex::new(-0.3, 0.45)],
            vec![Vec::new(), Vec::new()],
        );
        let psi0 = state.psi.clone();
        for _ in 0..steps {
            twa_step(&mut state, &maps, model.h(), dt, &mut rng);
        }
        for (n, &h_nn) in [1.0, 0.0].iter().enumerate() {
            let growth = (1.0 + dt * dt * h_nn * h_nn).powf(steps as f64 / 2.0);
            // Phase of the Euler factor (1 − i·h·dt) per step.
            let phase = (-dt * h_nn).atan2(1.0) * steps as f64;
            let expect = psi0[n] * Complex::from_polar(growth, phase);
            assert!(
                (state.psi[n] - expect).norm() < 1e-12,
                "site {n}: {} vs {expect}",
                state.psi[n]
            );
        }
    }

    #[test]
    fn pure_dephasing_keeps_site_amplitude() {
        // h₁₂ = 0 makes h̃ diagonal real: |ψ_n| changes only by the exact
        // deterministic Euler factor; with a′ = 0 that factor is known in
        // closed form and the match is to machine precision.
        let bath = SpectralDensity::drude(0.0, 1.0, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.0, bath).unwrap();
        let maps = empty_maps();
        let dt = 1e-3;
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut state = TwaState::new(
            vec![Complex::new(0.6, -0.2), Complex::new(0.1, 0.7)],
            vec![Vec::new(), Vec::new()],
        );
        let r0 = state.psi[0].norm();
        for _ in 0..500 {
            twa_step(&mut state, &maps, model.h(), dt, &mut rng);
        }
        let growth = (1.0 + dt * dt).powf(250.0);
        assert_relative_eq!(state.psi[0].norm(), r0 * growth, max_relative = 1e-13);
        // And with a coupled bath the amplitude still moves only through
        // the O(dt²) factor: bounded by (1 + dt²·h̃²_max)^{steps/2}.
        let bath = SpectralDensity::underdamped(0.1, 1.0, 0.1, Branch::Trig, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.0, bath).unwrap();
        let kernel = decompose(&bath, true, 0).unwrap();
        let map = build_map(&kernel, &bath).unwrap();
        let maps = vec![map.clone(), map];
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let sample = sampler.sample(&mut rng);
        let mut state = TwaState::new(
            sample.psi0.clone(),
            maps.iter()
                .map(|m| crate::auxmap::sample_phi0(&m.sigma, &mut rng))
                .collect(),
        );
        let r0 = state.psi[0].norm();
        for _ in 0..500 {
            twa_step(&mut state, &maps, model.h(), dt, &mut rng);
        }
        let rel_drift = (state.psi[0].norm() - r0).abs() / r0;
        assert!(rel_drift < 2e-3, "drift {rel_drift}");
    }

    #[test]
    fn twa_norm_drift_scales_linearly_in_dt() {
        // ‖ψ‖ gains O(dt²) per step, so at fixed horizon the accumulated
        // drift halves when dt halves.
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let t_end = 2.0;
        let mut drifts = Vec::new();
        for &dt in &[2e-3, 1e-3] {
            let mut total = 0.0;
            for seed in 0..64 {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let sample = sampler.sample(&mut rng);
                let phi0: Vec<Vec<f64>> = maps
                    .iter()
                    .map(|m| crate::auxmap::sample_phi0(&m.sigma, &mut rng))
                    .collect();
                let norm0: f64 = sample.psi0.iter().map(|p| p.norm_sqr()).sum();
                let mut state = TwaState::new(sample.psi0.clone(), phi0);
                for _ in 0..(t_end / dt) as usize {
                    twa_step(&mut state, &maps, model.h(), dt, &mut rng);
                }
                let norm1: f64 = state.psi.iter().map(|p| p.norm_sqr()).sum();
                total += (norm1 / norm0).ln().abs();
            }
            drifts.push(total / 64.0);
        }
        let ratio = drifts[0] / drifts[1];
        assert!(
            (1.6..2.4).contains(&ratio),
            "drift ratio {ratio} not ≈ 2 (drifts {drifts:?})"
        );
    }

    #[test]
    fn rabi_oscillation_matches_closed_formula() {
        // a′ = 0, 2 sites: ensemble P₁(t) follows the two-level formula
        // 1 − [h₁₂²/(h₁₂² + Δ²/4)]·sin²(√(h₁₂² + Δ²/4)·t).
        let model = closed_model();
        let maps = empty_maps();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let dt = 1e-3;
        let t_grid = [0.0, 1.0, 2.453, 4.0];
        let n = 20_000;
        let mut sums = [0.0f64; 4];
        let mut sq = [0.0f64; 4];
        for k in 0..n {
            let mut rng = ChaCha12Rng::seed_from_u64(1000 + k);
            let sample = sampler.sample(&mut rng);
            let rec = run_trajectory(
                SemiMethod::Twa,
                &model,
                &maps,
                &sample,
                dt,
                &t_grid,
                &mut rng,
            );
            for (i, w) in rec.weyl.iter().enumerate() {
                // The −1/2 offset is part of the Weyl symbol, so the weighted
                // mean of weyl₀₀ is the population itself.
                let z = rec.weights[i] * w[(0, 0)].re;
                sums[i] += z;
                sq[i] += z * z;
            }
        }
        let omega2 = 0.4f64 * 0.4 + 0.25;
        let rabi =
            |t: f64| 1.0 - (0.16 / omega2) * (omega2.sqrt() * t).sin() * (omega2.sqrt() * t).sin();
        for (i, &t) in t_grid.iter().enumerate() {
            let mean = sums[i] / n as f64;
            let var = (sq[i] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - rabi(t)).abs() <= 3.0 * se + 2e-3,
                "P1({t}) = {mean} vs {} (se {se})",
                rabi(t)
            );
        }
        // Minimum of the formula ≈ 0.60976.
        assert_relative_eq!(rabi(2.453407), 0.6097561, epsilon = 1e-4);
    }

    #[test]
    fn ctwa_equals_twa_when_no_correction() {
        // κ = 0 (zero coupling): same seed gives the same noise stream, and
        // R tracks ψψ† up to the O(dt²) difference of the two updates.
        let model = closed_model();
        let maps = empty_maps();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let t_grid = [0.0, 0.5, 1.0, 2.0];
        let mut gaps = Vec::new();
        for &dt in &[2e-3, 1e-3] {
            let mut rng_a = ChaCha12Rng::seed_from_u64(77);
            let sample_a = sampler.sample(&mut rng_a);
            let rec_a = run_trajectory(
                SemiMethod::Twa,
                &model,
                &maps,
                &sample_a,
                dt,
                &t_grid,
                &mut rng_a,
            );
            let mut rng_b = ChaCha12Rng::seed_from_u64(77);
            let sample_b = sampler.sample(&mut rng_b);
            let rec_b = run_trajectory(
                SemiMethod::Ctwa,
                &model,
                &maps,
                &sample_b,
                dt,
                &t_grid,
                &mut rng_b,
            );
            assert_eq!(sample_a.psi0, sample_b.psi0);
            let gap = rec_a
                .weyl
                .iter()
                .zip(&rec_b.weyl)
                .map(|(a, b)| a.max_abs_diff(b))
                .fold(0.0f64, f64::max);
            gaps.push(gap);
        }
        // Identical in the continuum limit: the discrete gap is O(dt).
        assert!(gaps[1] < 1e-2, "gap {gaps:?}");
        let ratio = gaps[0] / gaps[1];
        assert!((1.5..2.6).contains(&ratio), "gap ratio {ratio}");
    }

    #[test]
    fn ctwa_trace_identity_per_step() {
        // tr R moves exactly by the accumulated κ²·dW (machine precision).
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let sample = sampler.sample(&mut rng);
        let phi0: Vec<Vec<f64>> = maps
            .iter()
            .map(|m| crate::auxmap::sample_phi0(&m.sigma, &mut rng))
            .collect();
        let mut state = CtwaState::from_psi(&sample.psi0, phi0);
        let tr0 = state.r.trace().re;
        let dt = 1e-3;
        let mut prev_noise = 0.0;
        for step in 0..2000 {
            let tr_before = state.r.trace().re;
            ctwa_step(&mut state, &maps, model.h(), dt, &mut rng);
            let tr_after = state.r.trace().re;
            let step_noise = state.noise_trace - prev_noise;
            prev_noise = state.noise_trace;
            assert!(
                (tr_after - tr_before - step_noise).abs() < 1e-13,
                "step {step}: increment mismatch"
            );
        }
        assert!((state.r.trace().re - tr0 - state.noise_trace).abs() < 2e-12);
        // Hermiticity is preserved exactly.
        assert!(state.r.is_hermitian(0.0));
        assert_eq!(state.r[(0, 1)], state.r[(1, 0)].conj());
    }

    #[test]
    fn initial_grid_point_returns_weyl_of_sample() {
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let sample = sampler.sample(&mut rng);
        let rec = run_trajectory(
            SemiMethod::Twa,
            &model,
            &maps,
            &sample,
            1e-3,
            &[0.0],
            &mut rng,
        );
        assert_eq!(rec.times, vec![0.0]);
        let expect = crate::wigner::weyl_number(&sample.psi0, 0, 0);
        assert_eq!(rec.weyl[0][(0, 0)], expect);
        assert_eq!(rec.weights[0], sample.sign * sample.norm);
    }

    #[test]
    fn identical_seed_identical_trajectory() {
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let grid = [0.0, 0.25, 1.0];
        let run = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let sample = sampler.sample(&mut rng);
            run_trajectory(
                SemiMethod::Ctwa,
                &model,
                &maps,
                &sample,
                5e-4,
                &grid,
                &mut rng,
            )
        };
        let a = run(123);
        let b = run(123);
        for (x, y) in a.weyl.iter().zip(&b.weyl) {
            assert_eq!(x.data(), y.data());
        }
        let c = run(124);
        assert!(a.weyl[2].max_abs_diff(&c.weyl[2]) > 0.0);
    }

    #[test]
    #[should_panic(expected = "multiple of dt")]
    fn grid_must_be_multiple_of_dt() {
        grid_steps(&[0.0, 0.0015], 1e-3);
    }
}
