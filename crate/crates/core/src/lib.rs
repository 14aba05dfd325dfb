//! Scarred eigenfunctions of anisotropic quantum harmonic oscillators.
//!
//! The oscillator `Ĥ_ħ = ½ Σ ω_j (−ħ²∂²_j + x_j²)` with an arbitrary positive
//! frequency vector splits into commuting periodic pieces `ℋ_n`, one per
//! element of a rational basis of the span of the frequencies. This crate
//! builds that splitting exactly, constructs joint eigenstates of the pieces
//! that concentrate on a single invariant torus, and measures how fast their
//! phase-space expectations approach the classical orbit averages as `ħ → 0`.
//!
//! Module map:
//!
//! * [`freqarith`]: exact frequency arithmetic, periods and conductors.
//! * [`spectral`]: the joint spectrum, lattice windows and target eigenvalues.
//! * [`fockstate`]: number-basis states, coherent states, projections and
//!   quantum expectations.
//! * [`phasespace`]: symbols, classical flows, orbit averages, the achievable
//!   energy set and Husimi densities.
//! * [`scarlab`]: end-to-end constructions, residuals and `ħ` sweeps.

pub mod csvout;
pub mod error;
pub mod fockstate;
pub mod freqarith;
pub mod phasespace;
pub mod scarlab;
pub mod spectral;

pub use error::{Error, Result};
pub use fockstate::{FockState, ScarState};
pub use freqarith::{FrequencySpec, GeneratorBasis, HarmonicDecomposition, PeriodicComponent};
pub use phasespace::{EnergyVector, PhasePoint, Symbol};
pub use spectral::{FockIndex, TargetEigenvalue};

/// Complex amplitudes used throughout.
pub type C64 = num_complex::Complex64;
