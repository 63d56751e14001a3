//! Initial-state sampling from the Wigner function of a site-localized
//! single exciton, and Weyl symbols of number-type observables.
//!
//! The localized site's radial density (2/π)·e^{−2r²}·(4r²−1)·r changes sign
//! at r = 1/2, so samples carry a sign and the distribution's absolute
//! normalization N = 4e^{−1/2}−1; every other site is a plain complex
//! Gaussian with quadrature variance 1/4.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::math::adaptive_simpson;
use crate::{Complex, Error, Result};

/// One draw from the initial Wigner distribution.
#[derive(Clone, Debug)]
pub struct WignerSample {
    pub psi0: Vec<Complex>,
    /// Sign of the Wigner function at the draw (±1).
    pub sign: f64,
    /// Absolute normalization N(ρ_W); identical for all samples of a state.
    pub norm: f64,
}

/// Number of tabulated radial grid points.
const R_POINTS: usize = 4096;
/// Radial cutoff; the remaining mass is below e^{−32} of the total.
const R_MAX: f64 = 4.0;

/// Sampler for an exciton initially localized at one site.
#[derive(Clone, Debug)]
pub struct LocalizedSampler {
    n0: usize,
    n_sites: usize,
    norm: f64,
    /// CDF of the radial density |f| on the uniform r grid.
    cdf: Vec<f64>,
    /// r at uniform quantiles, for O(1) inverse-CDF draws.
    quantiles: Vec<f64>,
}

fn radial_pdf(r: f64) -> f64 {
    r * (-2.0 * r * r).exp() * (4.0 * r * r - 1.0).abs()
}

impl LocalizedSampler {
    /// `n0` is the initially occupied site (0-based).
    pub fn new(n0: usize, n_sites: usize) -> Result<Self> {
        if n0 >= n_sites {
            return Err(Error::InvalidInput(alloc::format!(
                "site {n0} out of range for {n_sites} sites"
            )));
        }
        // N(ρ_W) = ∫₀^∞ e^{−u}|2u−1| du, evaluated by quadrature with the
        // kink split out.
        let f = |u: f64| (-u).exp() * (2.0 * u - 1.0).abs();
        let norm = adaptive_simpson(&f, 0.0, 0.5, 1e-13)
            + adaptive_simpson(&f, 0.5, 60.0, 1e-13);

        // CDF of the radial density on a uniform grid, cell integrals by
        // Simpson; the sign-change kink at r = 1/2 contributes only an
        // O(Δr²) local error, far below the table resolution needed.
        let dr = R_MAX / (R_POINTS - 1) as f64;
        let mut cdf = Vec::with_capacity(R_POINTS);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 1..R_POINTS {
            let a = (i - 1) as f64 * dr;
            let b = i as f64 * dr;
            acc += (radial_pdf(a) + 4.0 * radial_pdf(0.5 * (a + b)) + radial_pdf(b)) * dr / 6.0;
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }

        // Invert onto uniform quantiles.
        let mut quantiles = Vec::with_capacity(R_POINTS + 1);
        let mut idx = 0usize;
        for k in 0..=R_POINTS {
            let q = k as f64 / R_POINTS as f64;
            while idx + 1 < R_POINTS && cdf[idx + 1] < q {
                idx += 1;
            }
            let (c0, c1) = (cdf[idx], cdf[idx + 1]);
            let frac = if c1 > c0 { (q - c0) / (c1 - c0) } else { 0.0 };
            quantiles.push((idx as f64 + frac.clamp(0.0, 1.0)) * dr);
        }

        Ok(Self {
            n0,
            n_sites,
            norm,
            cdf,
            quantiles,
        })
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Table CDF at radius r (linear interpolation), for diagnostics.
    pub fn cdf_at(&self, r: f64) -> f64 {
        let dr = R_MAX / (R_POINTS - 1) as f64;
        if r <= 0.0 {
            return 0.0;
        }
        if r >= R_MAX {
            return 1.0;
        }
        let x = r / dr;
        let i = (x as usize).min(R_POINTS - 2);
        let frac = x - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }

    fn draw_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let x = u * R_POINTS as f64;
        let i = (x as usize).min(R_POINTS - 1);
        let frac = x - i as f64;
        self.quantiles[i] + frac * (self.quantiles[i + 1] - self.quantiles[i])
    }

    /// Draws ψ(0): sites in index order; the localized site consumes
    /// (uniform, uniform) for (radius, phase), every other site two
    /// standard normals for its quadratures.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WignerSample {
        let mut psi0 = Vec::with_capacity(self.n_sites);
        let mut sign = 1.0;
        for n in 0..self.n_sites {
            if n == self.n0 {
                let r = self.draw_radius(rng);
                let theta: f64 = rng.random::<f64>() * core::f64::consts::TAU;
                sign = if 4.0 * r * r - 1.0 >= 0.0 { 1.0 } else { -1.0 };
                psi0.push(Complex::from_polar(r, theta));
            } else {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                psi0.push(Complex::new(0.5 * re, 0.5 * im));
            }
        }
        WignerSample {
            psi0,
            sign,
            norm: self.norm,
        }
    }
}

/// Weyl symbol of the transition-number operator: ψ_n·ψ*_{n'} − δ_{nn'}/2.
pub fn weyl_number(psi: &[Complex], n: usize, n_prime: usize) -> Complex {
    let mut w = psi[n] * psi[n_prime].conj();
    if n == n_prime {
        w -= 0.5;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Closed-form unnormalized radial mass M(r) = ∫₀^r s e^{−2s²}|4s²−1| ds,
    /// using the antiderivative −(1/4 + s²)e^{−2s²} of s·e^{−2s²}(4s²−1).
    fn radial_mass(r: f64) -> f64 {
        let a = |s: f64| -(0.25 + s * s) * (-2.0 * s * s).exp();
        if r <= 0.5 {
            a(0.0) - a(r)
        } else {
            (a(0.0) - a(0.5)) + (a(r) - a(0.5))
        }
    }

    fn analytic_cdf(r: f64) -> f64 {
        radial_mass(r) / radial_mass(f64::INFINITY)
    }

    #[test]
    fn norm_matches_analytic_value() {
        let s = LocalizedSampler::new(0, 2).unwrap();
        assert_relative_eq!(s.norm(), 4.0 * (-0.5f64).exp() - 1.0, epsilon = 1e-9);
    }

    #[test]
    fn table_cdf_matches_analytic_cdf() {
        let s = LocalizedSampler::new(0, 1).unwrap();
        let mut worst = 0.0f64;
        for i in 0..=2000 {
            let r = 4.0 * i as f64 / 2000.0;
            worst = worst.max((s.cdf_at(r) - analytic_cdf(r)).abs());
        }
        assert!(worst < 1e-6, "KS distance {worst}");
    }

    #[test]
    fn empirical_cdf_matches_analytic() {
        let s = LocalizedSampler::new(0, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 100_000;
        let mut radii: Vec<f64> = (0..n)
            .map(|_| s.sample(&mut rng).psi0[0].norm())
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, &r) in radii.iter().enumerate() {
            let emp = (i + 1) as f64 / n as f64;
            ks = ks.max((emp - analytic_cdf(r)).abs());
        }
        // 2/√n comfortably above the 1% critical value.
        assert!(ks < 2.0 / (n as f64).sqrt(), "KS = {ks}");
    }

    #[test]
    fn sign_follows_radius() {
        let s = LocalizedSampler::new(0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let w = s.sample(&mut rng);
            let r2 = w.psi0[0].norm_sqr();
            assert_eq!(w.sign, if 4.0 * r2 - 1.0 >= 0.0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn weyl_number_basics() {
        let psi = [Complex::ONE, Complex::ZERO];
        assert_eq!(weyl_number(&psi, 0, 0), Complex::new(0.5, 0.0));
        assert_eq!(weyl_number(&psi, 0, 1), Complex::ZERO);
        assert_eq!(weyl_number(&psi, 1, 1), Complex::new(-0.5, 0.0));
    }

    #[test]
    fn estimated_initial_state_is_projector() {
        // Weighted means reproduce ρ(0) = |n₀⟩⟨n₀| within 3 standard errors,
        // the raw weighted trace is 1 + N/2.
        let n_sites = 2;
        let s = LocalizedSampler::new(0, n_sites).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000;
        let mut mean = [[Complex::ZERO; 2]; 2];
        let mut m2 = [[0.0f64; 2]; 2];
        let mut tr_sum = 0.0;
        for _ in 0..n {
            let w = s.sample(&mut rng);
            let weight = w.sign * w.norm;
            for i in 0..n_sites {
                for j in 0..n_sites {
                    let z = weyl_number(&w.psi0, i, j) * weight;
                    mean[i][j] += z;
                    m2[i][j] += z.norm_sqr();
                }
            }
            tr_sum += weight * (w.psi0[0].norm_sqr() + w.psi0[1].norm_sqr());
        }
        let nf = n as f64;
        for i in 0..n_sites {
            for j in 0..n_sites {
                let m = mean[i][j] / nf;
                let var = (m2[i][j] / nf - m.norm_sqr()).max(0.0);
                let se = (var / nf).sqrt();
                let expect = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
                assert!(
                    (m - Complex::new(expect, 0.0)).norm() <= 3.0 * se + 1e-12,
                    "rho[{i}][{j}] = {m} vs {expect}, se {se}"
                );
            }
        }
        // E[w·tr ψψ†] = tr ρ + N/2 = 1 + N/2.
        let tr_mean = tr_sum / nf;
        assert!(
            (tr_mean - (1.0 + n_sites as f64 / 2.0)).abs() < 0.05,
            "raw trace {tr_mean}"
        );
    }

    #[test]
    fn site_index_validated() {
        assert!(LocalizedSampler::new(2, 2).is_err());
    }
}
