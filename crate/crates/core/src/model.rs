//! System Hamiltonian, bath spectral densities, and the named benchmark
//! parameter sets.
//!
//! Everything downstream is unit-agnostic; the benchmark presets express all
//! quantities in units of the donor-acceptor gap Δ.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::math::CMat;
use crate::{Complex, Error, Result};

/// Which closed-form branch of the structured spectral density applies:
/// `Trig` pairs (cos, sin) envelopes with exponents −γ ± iΩ, `Hyp` pairs
/// (cosh, sinh) with exponents −γ ± Ω (requires γ > Ω).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Trig,
    Hyp,
}

/// Spectral-density family. `coupling` is the primed coupling constant
/// (a′₂ for `Underdamped`, a′₁ for `Drude`), equal to the reorganization
/// energy of the bath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BathFamily {
    Underdamped {
        coupling: f64,
        gamma: f64,
        omega: f64,
        branch: Branch,
    },
    Drude {
        coupling: f64,
        gamma: f64,
    },
}

/// One site's bath: a spectral-density family at a temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDensity {
    pub family: BathFamily,
    pub temperature: f64,
}

impl SpectralDensity {
    pub fn underdamped(
        coupling: f64,
        gamma: f64,
        omega: f64,
        branch: Branch,
        temperature: f64,
    ) -> Result<Self> {
        let sd = Self {
            family: BathFamily::Underdamped {
                coupling,
                gamma,
                omega,
                branch,
            },
            temperature,
        };
        sd.validate()?;
        Ok(sd)
    }

    pub fn drude(coupling: f64, gamma: f64, temperature: f64) -> Result<Self> {
        let sd = Self {
            family: BathFamily::Drude { coupling, gamma },
            temperature,
        };
        sd.validate()?;
        Ok(sd)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidBath(msg));
        if self.temperature < 0.0 {
            return err(format!("temperature {} < 0", self.temperature));
        }
        match self.family {
            BathFamily::Underdamped {
                coupling,
                gamma,
                omega,
                branch,
            } => {
                if gamma <= 0.0 {
                    return err(format!("gamma {gamma} <= 0"));
                }
                if omega <= 0.0 {
                    return err(format!("omega {omega} <= 0 (use the Drude family for Ω = 0)"));
                }
                if coupling < 0.0 {
                    return err(format!("coupling {coupling} < 0"));
                }
                if branch == Branch::Hyp && gamma <= omega {
                    return err(format!(
                        "hyp branch needs gamma > omega, got {gamma} <= {omega}"
                    ));
                }
            }
            BathFamily::Drude { coupling, gamma } => {
                if gamma <= 0.0 {
                    return err(format!("gamma {gamma} <= 0"));
                }
                if coupling < 0.0 {
                    return err(format!("coupling {coupling} < 0"));
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        match self.family {
            BathFamily::Underdamped { gamma, .. } | BathFamily::Drude { gamma, .. } => gamma,
        }
    }

    /// Total bath coupling strength a′₁ + a′₂.
    pub fn reorganization_energy(&self) -> f64 {
        match self.family {
            BathFamily::Underdamped { coupling, .. } | BathFamily::Drude { coupling, .. } => {
                coupling
            }
        }
    }

    /// The spectral density J(ω) = Θ(ω)·J′(ω).
    pub fn j(&self, omega_arg: f64) -> f64 {
        if omega_arg <= 0.0 {
            return 0.0;
        }
        let w = omega_arg;
        match self.family {
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
                coupling * 4.0 * w2 * gamma * w
                    / ((w2 - w * w) * (w2 - w * w) + 4.0 * gamma * gamma * w * w)
            }
            BathFamily::Drude { coupling, gamma } => {
                coupling * 2.0 * gamma * w / (gamma * gamma + w * w)
            }
        }
    }
}

/// N-site tight-binding Hamiltonian with one independent bath per site.
#[derive(Clone, Debug)]
pub struct SystemModel {
    h: CMat,
    baths: Vec<SpectralDensity>,
}

impl SystemModel {
    pub fn new(h: CMat, baths: Vec<SpectralDensity>) -> Result<Self> {
        if !h.is_hermitian(1e-12 * h.max_abs().max(1.0)) {
            return Err(Error::InvalidInput("Hamiltonian is not Hermitian".into()));
        }
        if baths.len() != h.dim() {
            return Err(Error::InvalidInput(format!(
                "{} baths for {} sites",
                baths.len(),
                h.dim()
            )));
        }
        for b in &baths {
            b.validate()?;
        }
        Ok(Self { h, baths })
    }

    pub fn n_sites(&self) -> usize {
        self.h.dim()
    }

    pub fn h(&self) -> &CMat {
        &self.h
    }

    pub fn baths(&self) -> &[SpectralDensity] {
        &self.baths
    }
}

/// Two-site donor-acceptor model with h = [[Δ, h₁₂], [h₁₂, 0]] (energy zero
/// at the acceptor) and the same bath on both sites.
pub fn build_donor_acceptor(delta: f64, h12: f64, bath: SpectralDensity) -> Result<SystemModel> {
    let h = CMat::from_rows(&[
        &[Complex::new(delta, 0.0), Complex::new(h12, 0.0)],
        &[Complex::new(h12, 0.0), Complex::ZERO],
    ]);
    SystemModel::new(h, alloc::vec![bath, bath])
}

/// Free-function mirror of [`SpectralDensity::reorganization_energy`].
pub fn reorganization_energy(bath: &SpectralDensity) -> f64 {
    bath.reorganization_energy()
}

/// A named benchmark parameter set, everything in units of Δ.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub name: String,
    pub delta: f64,
    pub h12: f64,
    pub temperature: f64,
    pub bath: BathFamily,
    /// Initially excited site (0-based).
    pub initial_site: usize,
}

impl BenchmarkConfig {
    fn drude(name: &str, gamma: f64, coupling: f64, temperature: f64) -> Self {
        Self {
            name: name.into(),
            delta: 1.0,
            h12: 0.4,
            temperature,
            bath: BathFamily::Drude { coupling, gamma },
            initial_site: 0,
        }
    }

    fn underdamped(name: &str, gamma: f64, omega: f64, coupling: f64, temperature: f64) -> Self {
        Self {
            name: name.into(),
            delta: 1.0,
            h12: 0.4,
            temperature,
            bath: BathFamily::Underdamped {
                coupling,
                gamma,
                omega,
                branch: Branch::Trig,
            },
            initial_site: 0,
        }
    }

    /// All named presets.
    ///
    /// The `fig1-*` family is Drude (Ω = a′₂ = 0) at T/Δ = 2 with γ/Δ from
    /// the caption grid; its coupling a′₁ is a free parameter and defaults
    /// to 0.1·Δ here (override it in a run config if needed). The `fig2-*`
    /// family is underdamped (a′₂/Δ = 0.1, a′₁ = 0) at T/Δ = 2 spanning the
    /// two caption columns (Ω/Δ = 0.1 varying γ; γ/Δ = 1 varying Ω), and
    /// `fig3-*` is the same grid at T/Δ = 0.2.
    pub fn presets() -> Vec<BenchmarkConfig> {
        let mut v = Vec::new();
        for (suffix, gamma) in [("g01", 0.1), ("g1", 1.0)] {
            v.push(Self::drude(&format!("fig1-{suffix}"), gamma, 0.1, 2.0));
        }
        let grid: [(&str, f64, f64); 5] = [
            ("g01-O01", 0.1, 0.1),
            ("g05-O01", 0.5, 0.1),
            ("g1-O01", 1.0, 0.1),
            ("g1-O05", 1.0, 0.5),
            ("g1-O1", 1.0, 1.0),
        ];
        for (suffix, gamma, omega) in grid {
            v.push(Self::underdamped(
                &format!("fig2-{suffix}"),
                gamma,
                omega,
                0.1,
                2.0,
            ));
        }
        for (suffix, gamma, omega) in grid {
            v.push(Self::underdamped(
                &format!("fig3-{suffix}"),
                gamma,
                omega,
                0.1,
                0.2,
            ));
        }
        v
    }

    pub fn by_name(name: &str) -> Option<BenchmarkConfig> {
        Self::presets().into_iter().find(|p| p.name == name)
    }

    pub fn spectral_density(&self) -> SpectralDensity {
        SpectralDensity {
            family: self.bath,
            temperature: self.temperature,
        }
    }

    pub fn to_model(&self) -> Result<SystemModel> {
        build_donor_acceptor(self.delta, self.h12, self.spectral_density())
    }
}
