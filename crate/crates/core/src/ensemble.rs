//! Trajectory-ensemble orchestration: deterministic per-trajectory RNG
//! streams, weighted accumulation, and error estimation.
//!
//! Each trajectory k draws from its own counter-based stream of the master
//! seed, so results are independent of scheduling; accumulation happens in
//! fixed-size chunks whose partial sums are merged in chunk order, making
//! the output bit-identical for any worker count. All weight-bearing sums
//! are compensated and carry a power-of-two scale so that the exact
//! scheme's e^{≈700} weights can be squared without overflowing.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::auxmap::AuxBathMap;
use crate::exact_qc::{run_exact_into, PseudoDensityTable};
use crate::math::{CMat, Kbn};
use crate::model::SystemModel;
use crate::propagators::{run_trajectory_into, SemiMethod, TrajectoryRecord};
use crate::wigner::LocalizedSampler;
use crate::{Complex, Error, Result};

/// The stochastic methods an ensemble can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Twa,
    Ctwa,
    Exact,
}

/// Shared per-run parameters.
#[derive(Clone, Debug)]
pub struct EnsembleParams {
    pub dt: f64,
    pub t_grid: Vec<f64>,
    pub master_seed: u64,
}

/// The RNG of trajectory `index`: one ChaCha stream per trajectory, derived
/// injectively from (master seed, index).
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn exp2i(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// Compensated sum with a power-of-two scale: represents value·2^{scale}.
/// Rescaling happens at deterministic points (driven by the data), so chunk
/// merges remain bit-reproducible.
#[derive(Clone, Copy, Debug)]
struct ScaledKbn {
    scale: i32,
    acc: Kbn,
}

impl Default for ScaledKbn {
    fn default() -> Self {
        Self {
            scale: 0,
            acc: Kbn::default(),
        }
    }
}

impl ScaledKbn {
    fn rescale_to(&mut self, new_scale: i32) {
        if new_scale == self.scale {
            return;
        }
        self.acc.scale_pow2(exp2i(self.scale - new_scale));
        self.scale = new_scale;
    }

    fn add(&mut self, x: f64) {
        if x == 0.0 {
            return;
        }
        debug_assert!(x.is_finite());
        let ex = x.abs().log2().ceil() as i32;
        if ex > self.scale + 400 {
            self.rescale_to(ex - 100);
        }
        self.acc.add(x * exp2i(-self.scale));
    }

    /// Adds x², squaring only after shifting into range. The scale is kept
    /// even so the shift splits exactly in half.
    fn add_square(&mut self, x: f64) {
        if x == 0.0 {
            return;
        }
        debug_assert!(x.is_finite());
        let ex = 2 * x.abs().log2().ceil() as i32;
        if ex > self.scale + 400 {
            let mut target = ex - 100;
            if target % 2 != 0 {
                target += 1;
            }
            self.rescale_to(target);
        }
        debug_assert!(self.scale % 2 == 0);
        let xs = x * exp2i(-self.scale / 2);
        self.acc.add(xs * xs);
    }

    fn merge(&mut self, other: &ScaledKbn) {
        let target = self.scale.max(other.scale);
        self.rescale_to(target);
        let mut o = other.acc;
        o.scale_pow2(exp2i(other.scale - target));
        self.acc.merge(&o);
    }

    fn value(&self) -> f64 {
        self.acc.value() * exp2i(self.scale)
    }

    fn value_scaled(&self) -> (f64, i32) {
        (self.acc.value(), self.scale)
    }
}

/// Standard error of the mean of z from Σz and Σz² (NaN for n < 2).
fn standard_error(sum: &ScaledKbn, sq: &ScaledKbn, n: u64) -> f64 {
    if n < 2 {
        return f64::NAN;
    }
    let nf = n as f64;
    let (m2, s2) = sq.value_scaled();
    let (m1, s1) = sum.value_scaled();
    // (Σz)²/n expressed in the scale of Σz².
    let corr = m1 * m1 * exp2i(2 * s1 - s2) / nf;
    let var_mantissa = ((m2 - corr) / (nf - 1.0) / nf).max(0.0);
    var_mantissa.sqrt() * libm::exp2(s2 as f64 / 2.0)
}

/// Weighted estimate at one recorded time: means, per-component standard
/// errors, the average sign, and the effective sample size (Σw)²/Σw².
#[derive(Clone, Debug)]
pub struct TimeEstimate {
    pub t: f64,
    pub mean: CMat,
    /// Standard error of the real part, row-major per matrix entry.
    pub se_re: Vec<f64>,
    /// Standard error of the imaginary part.
    pub se_im: Vec<f64>,
    pub avg_sign: f64,
    pub ess: f64,
    pub n_traj: u64,
}

/// Running weighted sums of an ensemble (one chunk's worth, or the merged
/// total). Trajectories enter in index order within a chunk; chunks merge
/// in index order.
#[derive(Clone, Debug)]
pub struct Accumulator {
    n_sites: usize,
    times: Vec<f64>,
    n_traj: u64,
    sum_re: Vec<ScaledKbn>,
    sum_im: Vec<ScaledKbn>,
    sq_re: Vec<ScaledKbn>,
    sq_im: Vec<ScaledKbn>,
    sum_w: Vec<ScaledKbn>,
    sum_w2: Vec<ScaledKbn>,
    sum_sign: Vec<Kbn>,
}

impl Accumulator {
    pub fn new(n_sites: usize, times: &[f64]) -> Self {
        let per_entry = times.len() * n_sites * n_sites;
        Self {
            n_sites,
            times: times.to_vec(),
            n_traj: 0,
            sum_re: vec![ScaledKbn::default(); per_entry],
            sum_im: vec![ScaledKbn::default(); per_entry],
            sq_re: vec![ScaledKbn::default(); per_entry],
            sq_im: vec![ScaledKbn::default(); per_entry],
            sum_w: vec![ScaledKbn::default(); times.len()],
            sum_w2: vec![ScaledKbn::default(); times.len()],
            sum_sign: vec![Kbn::default(); times.len()],
        }
    }

    pub fn n_traj(&self) -> u64 {
        self.n_traj
    }

    pub fn add_record(&mut self, rec: &TrajectoryRecord) {
        let nn = self.n_sites * self.n_sites;
        debug_assert_eq!(rec.weyl.len(), self.times.len());
        for (k, weyl) in rec.weyl.iter().enumerate() {
            let w = rec.weights[k];
            for (e, z) in weyl.data().iter().enumerate() {
                let idx = k * nn + e;
                let zr = w * z.re;
                let zi = w * z.im;
                self.sum_re[idx].add(zr);
                self.sum_im[idx].add(zi);
                self.sq_re[idx].add_square(zr);
                self.sq_im[idx].add_square(zi);
            }
            self.sum_w[k].add(w);
            self.sum_w2[k].add_square(w);
            self.sum_sign[k].add(rec.signs[k]);
        }
        self.n_traj += 1;
    }

    /// Folds another chunk in. Call in ascending chunk order to keep the
    /// result independent of scheduling.
    pub fn merge(&mut self, other: &Accumulator) {
        assert_eq!(self.times, other.times);
        for (a, b) in self.sum_re.iter_mut().zip(&other.sum_re) {
            a.merge(b);
        }
        for (a, b) in self.sum_im.iter_mut().zip(&other.sum_im) {
            a.merge(b);
        }
        for (a, b) in self.sq_re.iter_mut().zip(&other.sq_re) {
            a.merge(b);
        }
        for (a, b) in self.sq_im.iter_mut().zip(&other.sq_im) {
            a.merge(b);
        }
        for (a, b) in self.sum_w.iter_mut().zip(&other.sum_w) {
            a.merge(b);
        }
        for (a, b) in self.sum_w2.iter_mut().zip(&other.sum_w2) {
            a.merge(b);
        }
        for (a, b) in self.sum_sign.iter_mut().zip(&other.sum_sign) {
            a.merge(b);
        }
        self.n_traj += other.n_traj;
    }

    /// Weighted means Σ w·O / n with delta-method standard errors.
    pub fn summarize(&self) -> Vec<TimeEstimate> {
        let n = self.n_sites;
        let nn = n * n;
        let nf = self.n_traj as f64;
        self.times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let mut mean = CMat::zeros(n);
                let mut se_re = vec![0.0; nn];
                let mut se_im = vec![0.0; nn];
                for e in 0..nn {
                    let idx = k * nn + e;
                    mean.data_mut()[e] = Complex::new(
                        self.sum_re[idx].value() / nf,
                        self.sum_im[idx].value() / nf,
                    );
                    se_re[e] = standard_error(&self.sum_re[idx], &self.sq_re[idx], self.n_traj);
                    se_im[e] = standard_error(&self.sum_im[idx], &self.sq_im[idx], self.n_traj);
                }
                let (w1, s1) = self.sum_w[k].value_scaled();
                let (w2, s2) = self.sum_w2[k].value_scaled();
                let ess = if w2 > 0.0 {
                    w1 * w1 / w2 * exp2i(2 * s1 - s2)
                } else {
                    0.0
                };
                TimeEstimate {
                    t,
                    mean,
                    se_re,
                    se_im,
                    avg_sign: self.sum_sign[k].value() / nf,
                    ess,
                    n_traj: self.n_traj,
                }
            })
            .collect()
    }
}

/// Runs the trajectories [start, start+count) and returns their chunk
/// accumulator. Each trajectory draws everything from its own stream, so
/// chunks can execute on any worker in any order.
#[allow(clippy::too_many_arguments)]
pub fn run_chunk(
    method: Method,
    model: &SystemModel,
    maps: &[AuxBathMap],
    table: Option<&PseudoDensityTable>,
    sampler: &LocalizedSampler,
    params: &EnsembleParams,
    start: u64,
    count: u64,
) -> Result<Accumulator> {
    let mut acc = Accumulator::new(model.n_sites(), &params.t_grid);
    let mut rec = TrajectoryRecord::with_capacity(model.n_sites(), params.t_grid.len());
    for k in start..start + count {
        let mut rng = trajectory_rng(params.master_seed, k);
        let sample = sampler.sample(&mut rng);
        match method {
            Method::Twa => run_trajectory_into(
                SemiMethod::Twa,
                model,
                maps,
                &sample,
                params.dt,
                &params.t_grid,
                &mut rng,
                &mut rec,
            ),
            Method::Ctwa => run_trajectory_into(
                SemiMethod::Ctwa,
                model,
                maps,
                &sample,
                params.dt,
                &params.t_grid,
                &mut rng,
                &mut rec,
            ),
            Method::Exact => {
                let table = table.ok_or_else(|| {
                    Error::InvalidInput("the exact scheme needs a pseudo-density table".into())
                })?;
                run_exact_into(
                    model,
                    maps,
                    table,
                    &sample,
                    params.dt,
                    &params.t_grid,
                    &mut rng,
                    &mut rec,
                )
                .map_err(|e| match e {
                    Error::WeightOverflow { log_weight, .. } => Error::WeightOverflow {
                        trajectory: k,
                        log_weight,
                    },
                    other => other,
                })?;
            }
        }
        acc.add_record(&rec);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auxmap::build_map;
    use crate::kernels::decompose;
    use crate::model::{build_donor_acceptor, Branch, SpectralDensity};
    use approx::assert_relative_eq;

    fn fig2_setup() -> (SystemModel, Vec<AuxBathMap>) {
        let bath = SpectralDensity::underdamped(0.1, 1.0, 0.1, Branch::Trig, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.4, bath).unwrap();
        let kernel = decompose(&bath, true, 0).unwrap();
        let map = build_map(&kernel, &bath).unwrap();
        (model, vec![map.clone(), map])
    }

    fn constant_record(n_sites: usize, w: f64, o: f64) -> TrajectoryRecord {
        let mut rec = TrajectoryRecord::with_capacity(n_sites, 1);
        rec.times[0] = 0.0;
        rec.weights[0] = w;
        rec.signs[0] = w.signum();
        for e in rec.weyl[0].data_mut() {
            *e = Complex::new(o, 0.0);
        }
        rec
    }

    #[test]
    fn summarize_constant_weights() {
        let mut acc = Accumulator::new(1, &[0.0]);
        for _ in 0..10 {
            acc.add_record(&constant_record(1, 1.0, 0.7));
        }
        let est = &acc.summarize()[0];
        assert_eq!(est.mean[(0, 0)].re, 0.7);
        assert_eq!(est.se_re[0], 0.0);
        assert_eq!(est.avg_sign, 1.0);
        assert_relative_eq!(est.ess, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn summarize_cancelling_signs() {
        let mut acc = Accumulator::new(1, &[0.0]);
        acc.add_record(&constant_record(1, 1.0, 1.0));
        acc.add_record(&constant_record(1, -1.0, 1.0));
        let est = &acc.summarize()[0];
        assert_eq!(est.mean[(0, 0)].re, 0.0);
        assert_eq!(est.avg_sign, 0.0);
        // ESS collapses to n·(avg sign)² = 0 under full cancellation.
        assert_eq!(est.ess, 0.0);
    }

    #[test]
    fn single_trajectory_flags_se() {
        let mut acc = Accumulator::new(1, &[0.0]);
        acc.add_record(&constant_record(1, 1.0, 0.3));
        let est = &acc.summarize()[0];
        assert_eq!(est.mean[(0, 0)].re, 0.3);
        assert!(est.se_re[0].is_nan());
    }

    #[test]
    fn huge_weights_do_not_overflow() {
        // Weights near the e^700 guard must square without producing inf.
        let mut acc = Accumulator::new(1, &[0.0]);
        let w = (690.0f64).exp();
        acc.add_record(&constant_record(1, w, 1.0));
        acc.add_record(&constant_record(1, -0.5 * w, 1.0));
        acc.add_record(&constant_record(1, 1.0, 1.0));
        let est = &acc.summarize()[0];
        assert!(est.mean[(0, 0)].re.is_finite());
        assert_relative_eq!(est.mean[(0, 0)].re, 0.5 * w / 3.0, max_relative = 1e-12);
        assert!(est.se_re[0].is_finite());
        assert!(est.ess.is_finite());
        assert!(est.ess > 0.0);
    }

    #[test]
    fn chunking_is_bit_reproducible() {
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let params = EnsembleParams {
            dt: 1e-3,
            t_grid: vec![0.0, 0.05, 0.2],
            master_seed: 99,
        };
        let whole = run_chunk(
            Method::Ctwa, &model, &maps, None, &sampler, &params, 0, 64,
        )
        .unwrap();
        // Four chunks, merged in index order after being produced in a
        // scrambled execution order.
        let chunks: Vec<Accumulator> = [3u64, 0, 2, 1]
            .iter()
            .map(|&c| {
                run_chunk(
                    Method::Ctwa, &model, &maps, None, &sampler, &params, c * 16, 16,
                )
                .unwrap()
            })
            .collect();
        let mut merged = Accumulator::new(2, &params.t_grid);
        let mut order: Vec<(u64, &Accumulator)> =
            [3u64, 0, 2, 1].iter().copied().zip(chunks.iter()).collect();
        order.sort_by_key(|(c, _)| *c);
        for (_, c) in order {
            merged.merge(c);
        }
        let a = whole.summarize();
        let b = merged.summarize();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean.data(), y.mean.data());
            assert_eq!(x.se_re, y.se_re);
            assert_eq!(x.avg_sign, y.avg_sign);
        }
    }

    #[test]
    fn initial_state_estimate_from_ensemble() {
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let params = EnsembleParams {
            dt: 1e-3,
            t_grid: vec![0.0],
            master_seed: 7,
        };
        let acc = run_chunk(
            Method::Twa, &model, &maps, None, &sampler, &params, 0, 100_000,
        )
        .unwrap();
        let est = &acc.summarize()[0];
        for i in 0..2 {
            for j in 0..2 {
                let want = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
                let m = est.mean[(i, j)];
                let se = est.se_re[i * 2 + j].hypot(est.se_im[i * 2 + j]);
                assert!(
                    (m - Complex::new(want, 0.0)).norm() <= 3.0 * se + 1e-12,
                    "rho[{i}][{j}] = {m}, se = {se}"
                );
            }
        }
    }

    #[test]
    fn standard_error_scales_with_sqrt_n() {
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let params = EnsembleParams {
            dt: 2e-3,
            t_grid: vec![0.5],
            master_seed: 5,
        };
        let small = run_chunk(
            Method::Twa, &model, &maps, None, &sampler, &params, 0, 2000,
        )
        .unwrap()
        .summarize();
        let large = run_chunk(
            Method::Twa, &model, &maps, None, &sampler, &params, 0, 8000,
        )
        .unwrap()
        .summarize();
        let ratio = small[0].se_re[0] / large[0].se_re[0];
        assert!(
            (ratio - 2.0).abs() < 0.4,
            "SE ratio {ratio} not within 20% of the CLT slope"
        );
    }

    #[test]
    fn ctwa_ensemble_trace_is_unity() {
        // Mean of tr(R − 1/2) = Σ_n ρ_nn = 1 within 3 SE at every time.
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let params = EnsembleParams {
            dt: 1e-3,
            t_grid: vec![0.0, 0.2, 0.5],
            master_seed: 31,
        };
        let acc = run_chunk(
            Method::Ctwa, &model, &maps, None, &sampler, &params, 0, 20_000,
        )
        .unwrap();
        for est in acc.summarize() {
            let tr = est.mean[(0, 0)] + est.mean[(1, 1)];
            let se = (est.se_re[0] * est.se_re[0] + est.se_re[3] * est.se_re[3]).sqrt();
            assert!(
                (tr.re - 1.0).abs() <= 3.0 * se,
                "t = {}: tr = {} (se {se})",
                est.t,
                tr.re
            );
        }
    }

    #[test]
    fn exact_method_requires_table() {
        let (model, maps) = fig2_setup();
        let sampler = LocalizedSampler::new(0, 2).unwrap();
        let params = EnsembleParams {
            dt: 1e-3,
            t_grid: vec![0.0],
            master_seed: 1,
        };
        assert!(run_chunk(
            Method::Exact, &model, &maps, None, &sampler, &params, 0, 1,
        )
        .is_err());
    }
}
