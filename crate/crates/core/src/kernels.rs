//! Noise and dissipation kernels F(t)/π and D(t)/π as explicit sums of
//! exponentially decaying terms.
//!
//! For both supported spectral-density families the kernels close over a
//! pair of exponents (plus optional Matsubara terms at finite temperature),
//! which is what makes the time-local auxiliary mapping and the HEOM solver
//! exact for this model class.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{BathFamily, Branch, SpectralDensity};
use crate::{Complex, Error, Result};

/// One exponential term of the kernel pair:
/// D(t)/π ⊃ Re[αD·e^{λt}], F(t)/π ⊃ Re[αF·e^{λt}], with Re λ < 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelTerm {
    pub lambda: Complex,
    pub alpha_f: Complex,
    pub alpha_d: Complex,
    /// True for Matsubara terms (always real λ, αD = 0).
    pub matsubara: bool,
}

/// F(t)/π and D(t)/π of one bath as exponential sums.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialKernel {
    pub terms: Vec<KernelTerm>,
    /// Number of Matsubara terms kept (0 in high-temperature mode).
    pub matsubara_cutoff: usize,
}

/// Number of explicitly summed terms in the Matsubara pole sums before the
/// O(1/l²) remainder is folded in as an integral.
const POLE_SUM_EXPLICIT: usize = 2000;

/// Fully converged pole sums f_S, f_A entering the noise-kernel
/// coefficients. `sgn` is +1 for the trig branch, −1 for hyp; `w2` = γ² ± Ω².
///
/// The sums decay only as 1/l², so after `POLE_SUM_EXPLICIT` explicit terms
/// the remainder is evaluated as a midpoint-rule integral (substituted to a
/// finite interval), which leaves an error far below 1e-10.
fn pole_sums(
    gamma: f64,
    omega: f64,
    w2: f64,
    sgn: f64,
    temperature: f64,
) -> Result<(f64, f64)> {
    use crate::math::adaptive_simpson;
    let nu_of = |x: f64| 2.0 * core::f64::consts::PI * x * temperature;
    let den_of = move |nu: f64| (w2 - nu * nu) * (w2 - nu * nu) + sgn * 4.0 * nu * nu * omega * omega;
    let mut fs = 1.0 / w2;
    let mut fa = 1.0 / w2;
    for k in 1..=POLE_SUM_EXPLICIT {
        let nu = nu_of(k as f64);
        let den = den_of(nu);
        if den.abs() < 1e-10 * (w2 + nu * nu) * (w2 + nu * nu) {
            return Err(Error::InvalidBath(format!(
                "Matsubara frequency ν_{k} = {nu} collides with a kernel pole"
            )));
        }
        fs += 2.0 * (w2 - nu * nu) / den;
        fa += 2.0 * (w2 + nu * nu) / den;
    }
    // Σ_{l>Λ} g(l) ≈ ∫_{Λ+1/2}^∞ g(x) dx, mapped to u = 1/x so the 1/x²
    // decay becomes a smooth integrand on a finite interval.
    let x0 = POLE_SUM_EXPLICIT as f64 + 0.5;
    let two_pi_t = nu_of(1.0);
    let tail = |g: &dyn Fn(f64) -> f64, limit0: f64| {
        adaptive_simpson(
            &|u: f64| {
                if u == 0.0 {
                    limit0
                } else {
                    g(nu_of(1.0 / u)) / (u * u)
                }
            },
            0.0,
            1.0 / x0,
            1e-16,
        )
    };
    fs += tail(
        &|nu| 2.0 * (w2 - nu * nu) / den_of(nu),
        -2.0 / (two_pi_t * two_pi_t),
    );
    fa += tail(
        &|nu| 2.0 * (w2 + nu * nu) / den_of(nu),
        2.0 / (two_pi_t * two_pi_t),
    );
    Ok((gamma * fs, omega * fa))
}

/// Builds the exponential representation of F/π and D/π for a bath.
///
/// With `high_t` the classical limit coth(ω/2T) ≈ 2T/ω is taken and all
/// Matsubara sums are dropped (`l` is ignored); otherwise `l` Matsubara
/// terms are kept and the pole sums are truncated consistently at `l`.
pub fn decompose(bath: &SpectralDensity, high_t: bool, l: usize) -> Result<ExponentialKernel> {
    bath.validate()?;
    let temperature = bath.temperature;
    if !high_t && temperature <= 0.0 {
        return Err(Error::InvalidBath(
            "finite-temperature mode needs T > 0".into(),
        ));
    }
    let l = if high_t { 0 } else { l };

    let mut terms = Vec::new();
    match bath.family {
        BathFamily::Underdamped {
            coupling,
            gamma,
            omega,
            branch,
        } => {
            if coupling == 0.0 {
                return Ok(ExponentialKernel {
                    terms,
                    matsubara_cutoff: 0,
                });
            }
            let sgn = match branch {
                Branch::Trig => 1.0,
                Branch::Hyp => -1.0,
            };
            let w2 = gamma * gamma + sgn * omega * omega;
            let a2 = w2 / omega * coupling;
            let (fs, fa) = if high_t {
                (gamma / w2, omega / w2)
            } else {
                pole_sums(gamma, omega, w2, sgn, temperature)?
            };
            // D/π = a₂·S(Ωt)·e^{−γt};  F/π = Fc·C(Ωt)e^{−γt} + Fs·S(Ωt)e^{−γt}.
            let f_c = 2.0 * temperature * a2 * fa;
            let f_s = 2.0 * temperature * a2 * fs;
            match branch {
                Branch::Trig => {
                    // C = cos, S = sin: e^{(−γ±iΩ)t} carry (coeff_C ∓ i·coeff_S)/2.
                    let lp = Complex::new(-gamma, omega);
                    terms.push(KernelTerm {
                        lambda: lp,
                        alpha_f: Complex::new(f_c, -f_s) * 0.5,
                        alpha_d: Complex::new(0.0, -a2) * 0.5,
                        matsubara: false,
                    });
                    terms.push(KernelTerm {
                        lambda: lp.conj(),
                        alpha_f: Complex::new(f_c, f_s) * 0.5,
                        alpha_d: Complex::new(0.0, a2) * 0.5,
                        matsubara: false,
                    });
                }
                Branch::Hyp => {
                    // C = cosh, S = sinh: e^{(−γ±Ω)t} carry (coeff_C ± coeff_S)/2.
                    terms.push(KernelTerm {
                        lambda: Complex::new(-gamma + omega, 0.0),
                        alpha_f: Complex::new(0.5 * (f_c + f_s), 0.0),
                        alpha_d: Complex::new(0.5 * a2, 0.0),
                        matsubara: false,
                    });
                    terms.push(KernelTerm {
                        lambda: Complex::new(-gamma - omega, 0.0),
                        alpha_f: Complex::new(0.5 * (f_c - f_s), 0.0),
                        alpha_d: Complex::new(-0.5 * a2, 0.0),
                        matsubara: false,
                    });
                }
            }
            for k in 1..=l {
                let nu = 2.0 * core::f64::consts::PI * k as f64 * temperature;
                // 2Ti·J′(iν) for this family.
                let den = (w2 + nu * nu) * (w2 + nu * nu) - 4.0 * gamma * gamma * nu * nu;
                if den.abs() < 1e-12 * w2 * w2 {
                    return Err(Error::InvalidBath(format!(
                        "Matsubara frequency ν_{k} = {nu} collides with a kernel pole"
                    )));
                }
                let alpha = -8.0 * temperature * coupling * w2 * gamma * nu / den;
                terms.push(KernelTerm {
                    lambda: Complex::new(-nu, 0.0),
                    alpha_f: Complex::new(alpha, 0.0),
                    alpha_d: Complex::ZERO,
                    matsubara: true,
                });
            }
        }
        BathFamily::Drude { coupling, gamma } => {
            if coupling == 0.0 {
                return Ok(ExponentialKernel {
                    terms,
                    matsubara_cutoff: 0,
                });
            }
            let a1 = gamma * coupling;
            // f_A drops out with Ω = 0; f_S reduces to Σ 2/(γ² − ν²) terms.
            let gfs = if high_t {
                1.0 / gamma
            } else {
                pole_sums(gamma, 0.0, gamma * gamma, 1.0, temperature)?.0
            };
            terms.push(KernelTerm {
                lambda: Complex::new(-gamma, 0.0),
                alpha_f: Complex::new(2.0 * temperature * a1 * gfs, 0.0),
                alpha_d: Complex::new(a1, 0.0),
                matsubara: false,
            });
            for k in 1..=l {
                let nu = 2.0 * core::f64::consts::PI * k as f64 * temperature;
                let alpha =
                    4.0 * temperature * coupling * gamma * nu / (nu * nu - gamma * gamma);
                terms.push(KernelTerm {
                    lambda: Complex::new(-nu, 0.0),
                    alpha_f: Complex::new(alpha, 0.0),
                    alpha_d: Complex::ZERO,
                    matsubara: true,
                });
            }
        }
    }

    let kernel = ExponentialKernel {
        terms,
        matsubara_cutoff: l,
    };
    debug_assert!(kernel.terms.iter().all(|t| t.lambda.re < 0.0));
    Ok(kernel)
}

impl ExponentialKernel {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn eval(&self, t: f64, pick: impl Fn(&KernelTerm) -> Complex) -> f64 {
        let mut s = Complex::ZERO;
        for term in &self.terms {
            s += pick(term) * (term.lambda * t).exp();
        }
        debug_assert!(
            s.im.abs() <= 1e-12 * (s.re.abs() + 1.0),
            "kernel reconstruction not real: {s}"
        );
        s.re
    }

    /// D(t)/π.
    pub fn eval_d(&self, t: f64) -> f64 {
        self.eval(t, |k| k.alpha_d)
    }

    /// F(t)/π.
    pub fn eval_f(&self, t: f64) -> f64 {
        self.eval(t, |k| k.alpha_f)
    }

    /// Bath correlation function C(t) = F(t)/π − i·D(t)/π.
    pub fn eval_c(&self, t: f64) -> Complex {
        let mut s = Complex::ZERO;
        for term in &self.terms {
            s += (term.alpha_f - Complex::i() * term.alpha_d) * (term.lambda * t).exp();
        }
        s
    }
}
