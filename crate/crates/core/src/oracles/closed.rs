use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::math::CMat;
use crate::model::SystemModel;
use crate::Complex;

/// Exact unitary evolution of the single-exciton density matrix by dense
/// eigendecomposition of h: ρ(t) = V·e^{−iΛt}·V†·ρ₀·V·e^{iΛt}·V†.
pub fn closed_system(model: &SystemModel, rho0: &CMat, t_grid: &[f64]) -> Vec<CMat> {
    let n = model.n_sites();
    assert_eq!(rho0.dim(), n);
    let (vals, vecs) = model.h().hermitian_eigen();
    let vdag = vecs.dagger();
    // ρ in the eigenbasis.
    let rho_e = vdag.matmul(rho0).matmul(&vecs);
    t_grid
        .iter()
        .map(|&t| {
            let mut rot = CMat::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let phase = Complex::from_polar(1.0, -(vals[i] - vals[j]) * t);
                    rot[(i, j)] = rho_e[(i, j)] * phase;
                }
            }
            vecs.matmul(&rot).matmul(&vdag)
        })
        .collect()
}
