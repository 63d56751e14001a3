use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::kernels::ExponentialKernel;
use crate::math::CMat;
use crate::model::SystemModel;
use crate::{Complex, Error, Result};

/// Lineshape function g(t) = ∫₀^t dτ ∫₀^τ ds C(s) of one bath, in closed
/// form from its exponential terms:
/// g(t) = Σ_l c_l·[(e^{λ_l t} − 1)/λ_l² − t/λ_l] with c_l = αF_l − i·αD_l.
pub fn lineshape(kernel: &ExponentialKernel, t: f64) -> Complex {
    let mut g = Complex::ZERO;
    for term in &kernel.terms {
        let c = term.alpha_f - Complex::i() * term.alpha_d;
        let l = term.lambda;
        g += c * (((l * t).exp() - 1.0) / (l * l) - t / l);
    }
    g
}

/// Exact independent-boson solution for h with zero off-diagonal elements:
/// populations are frozen and each coherence decays as
/// ρ_{nn'}(t) = ρ_{nn'}(0)·e^{−i(h_nn−h_n'n')t}·e^{−g_n(t)−g_{n'}(t)*}.
pub fn pure_dephasing(
    model: &SystemModel,
    kernels: &[ExponentialKernel],
    rho0: &CMat,
    t_grid: &[f64],
) -> Result<Vec<CMat>> {
    let n = model.n_sites();
    assert_eq!(kernels.len(), n);
    assert_eq!(rho0.dim(), n);
    let h = model.h();
    for i in 0..n {
        for j in 0..n {
            if i != j && h[(i, j)] != Complex::ZERO {
                return Err(Error::InvalidInput(
                    "pure-dephasing oracle needs a diagonal Hamiltonian".into(),
                ));
            }
        }
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let g: Vec<Complex> = kernels.iter().map(|k| lineshape(k, t)).collect();
            let mut rho = CMat::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        rho[(i, i)] = rho0[(i, i)];
                    } else {
                        let phase =
                            Complex::from_polar(1.0, -(h[(i, i)].re - h[(j, j)].re) * t);
                        rho[(i, j)] = rho0[(i, j)] * phase * (-(g[i] + g[j].conj())).exp();
                    }
                }
            }
            rho
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::decompose;
    use crate::math::adaptive_simpson;
    use crate::model::{build_donor_acceptor, Branch, SpectralDensity};
    use crate::oracles::uniform_superposition;
    use approx::assert_relative_eq;

    #[test]
    fn lineshape_matches_double_quadrature() {
        let bath = SpectralDensity::underdamped(0.1, 1.0, 0.1, Branch::Trig, 2.0).unwrap();
        let kernel = decompose(&bath, true, 0).unwrap();
        for &t in &[0.3, 1.0, 4.0] {
            let re = adaptive_simpson(
                &|tau: f64| adaptive_simpson(&|s: f64| kernel.eval_c(s).re, 0.0, tau, 1e-12),
                0.0,
                t,
                1e-11,
            );
            let im = adaptive_simpson(
                &|tau: f64| adaptive_simpson(&|s: f64| kernel.eval_c(s).im, 0.0, tau, 1e-12),
                0.0,
                t,
                1e-11,
            );
            let g = lineshape(&kernel, t);
            assert_relative_eq!(g.re, re, epsilon = 1e-8);
            assert_relative_eq!(g.im, im, epsilon = 1e-8);
        }
    }

    #[test]
    fn no_decay_without_coupling() {
        let bath = SpectralDensity::drude(0.0, 1.0, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.0, bath).unwrap();
        let kernels = vec![
            decompose(&bath, true, 0).unwrap(),
            decompose(&bath, true, 0).unwrap(),
        ];
        let rho0 = uniform_superposition(2);
        let rho = pure_dephasing(&model, &kernels, &rho0, &[0.0, 2.0, 10.0]).unwrap();
        for r in &rho {
            assert_relative_eq!(r[(0, 1)].norm(), 0.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn coherence_magnitude_decays_with_re_lineshape() {
        let bath = SpectralDensity::underdamped(0.1, 1.0, 0.1, Branch::Trig, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.0, bath).unwrap();
        let kernel = decompose(&bath, true, 0).unwrap();
        let kernels = vec![kernel.clone(), kernel.clone()];
        let rho0 = uniform_superposition(2);
        let t_grid = [0.0, 0.5, 2.0, 8.0];
        let rho = pure_dephasing(&model, &kernels, &rho0, &t_grid).unwrap();
        for (k, &t) in t_grid.iter().enumerate() {
            let expect = 0.5 * (-2.0 * lineshape(&kernel, t).re).exp();
            assert_relative_eq!(rho[k][(0, 1)].norm(), expect, epsilon = 1e-12);
            // Populations frozen.
            assert_relative_eq!(rho[k][(0, 0)].re, 0.5, epsilon = 1e-14);
        }
        // Magnitudes actually decay.
        assert!(rho[3][(0, 1)].norm() < rho[0][(0, 1)].norm());
    }

    #[test]
    fn rejects_hopping() {
        let bath = SpectralDensity::drude(0.1, 1.0, 2.0).unwrap();
        let model = build_donor_acceptor(1.0, 0.4, bath).unwrap();
        let kernels = vec![
            decompose(&bath, true, 0).unwrap(),
            decompose(&bath, true, 0).unwrap(),
        ];
        assert!(pure_dephasing(&model, &kernels, &uniform_superposition(2), &[0.0]).is_err());
    }
}
