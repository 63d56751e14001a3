//! Deterministic reference solvers used to validate the stochastic methods:
//! exact closed-system evolution, the analytic pure-dephasing solution, and
//! a hierarchical-equations-of-motion integrator for baths with exponential
//! correlation functions.

mod closed;
mod dephasing;
mod heom;

pub use closed::closed_system;
pub use dephasing::{lineshape, pure_dephasing};
pub use heom::{heom_converged, heom_propagate, HeomHierarchy};

use crate::math::CMat;
use crate::Complex;

/// Density matrix |site⟩⟨site| in the single-exciton basis.
pub fn site_projector(n_sites: usize, site: usize) -> CMat {
    let mut rho = CMat::zeros(n_sites);
    rho[(site, site)] = Complex::ONE;
    rho
}

/// Uniform coherent superposition |+⟩⟨+|, handy for dephasing tests.
pub fn uniform_superposition(n_sites: usize) -> CMat {
    let mut rho = CMat::zeros(n_sites);
    let w = Complex::new(1.0 / n_sites as f64, 0.0);
    for i in 0..n_sites {
        for j in 0..n_sites {
            rho[(i, j)] = w;
        }
    }
    rho
}
