//! Stochastic phase-space simulation of exciton transport in open quantum
//! systems with non-Markovian harmonic baths.
//!
//! The crate propagates ensembles of classical trajectories whose initial
//! conditions are drawn from the Wigner function of the initial state and
//! whose bath memory is carried by a small set of damped auxiliary modes.
//! Three stochastic methods share this machinery:
//!
//! * [`ensemble::Method::Twa`] — the truncated Wigner approximation,
//! * [`ensemble::Method::Ctwa`] — the corrected TWA, which propagates the
//!   matrix ψψ† with an extra correlated diagonal noise term,
//! * [`ensemble::Method::Exact`] — the sign-weighted scheme that keeps all
//!   quantum corrections at the cost of an exponentially growing weight.
//!
//! Deterministic reference solvers (HEOM, pure dephasing, closed system)
//! live in [`oracles`].
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature is
//! on by default.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod auxmap;
pub mod ensemble;
pub mod error;
pub mod exact_qc;
pub mod kernels;
pub mod math;
pub mod model;
pub mod oracles;
pub mod propagators;
pub mod wigner;

pub use error::Error;

/// Shorthand used throughout the crate.
pub type Complex = num_complex::Complex64;

pub type Result<T> = core::result::Result<T, Error>;
