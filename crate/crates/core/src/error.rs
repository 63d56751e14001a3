use alloc::string::String;
use core::fmt;

/// Errors surfaced by model construction, the bath mapping, and the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A spectral density violates its parameter constraints.
    InvalidBath(String),
    /// Generic precondition violation (shapes, grids, indices).
    InvalidInput(String),
    /// The noise kernel cannot be realized with nonnegative squared noise
    /// amplitudes; typically a low-temperature Matsubara truncation.
    UnrealizableKernel(String),
    /// The drift matrix of an auxiliary block is not Hurwitz, so no
    /// stationary covariance exists.
    NotHurwitz,
    /// An auxiliary map failed its kernel-reconstruction check.
    MapVerification {
        /// Which kernel failed ("D" or "F").
        kernel: &'static str,
        /// Time of the worst residual.
        time: f64,
        /// Worst absolute residual, relative to the kernel scale.
        residual: f64,
    },
    /// A trajectory weight exceeded the floating-point range guard.
    WeightOverflow { trajectory: u64, log_weight: f64 },
    /// The hierarchy did not converge within the supported depth.
    HeomNotConverged { depth: usize, delta: f64 },
    /// Auxiliary-map composition not covered by the closed-form blocks.
    UnsupportedMap(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidBath(msg) => write!(f, "invalid spectral density: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::UnrealizableKernel(msg) => {
                write!(f, "kernel not realizable as an auxiliary map: {msg}")
            }
            Error::NotHurwitz => write!(f, "drift matrix is not Hurwitz"),
            Error::MapVerification {
                kernel,
                time,
                residual,
            } => write!(
                f,
                "auxiliary map fails to reproduce the {kernel} kernel: \
                 relative residual {residual:.3e} at t = {time}"
            ),
            Error::WeightOverflow {
                trajectory,
                log_weight,
            } => write!(
                f,
                "trajectory {trajectory}: log-weight {log_weight:.1} exceeds overflow guard"
            ),
            Error::HeomNotConverged { depth, delta } => write!(
                f,
                "hierarchy not converged at depth {depth}: |ΔP| = {delta:.3e}"
            ),
            Error::UnsupportedMap(msg) => write!(f, "unsupported auxiliary map: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
