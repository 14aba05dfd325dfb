//! End-to-end constructions: scarred eigenstates on one torus, convex
//! combinations over several tori, residual diagnostics and `ħ` sweeps.

mod sweep;

pub use sweep::{
    default_probes, fit_slope, hbar_schedule, sweep, Band, ConvergenceReport, ReportRow,
    SweepConfig, SLOPE_DROP,
};

use crate::error::{Error, Result};
use crate::fockstate::{
    apply_polynomial, component_operator, expectation, normalize_scar, FockState, ScarState,
};
use crate::freqarith::HarmonicDecomposition;
use crate::phasespace::{component_energies, compose_flow, orbit_average, PhasePoint, Symbol};
use crate::C64;

/// Largest allowed `|ℋ_n(z₀) − E_n|`.
pub const LEVEL_SET_TOL: f64 = 1e-10;
/// Points per component period in invariance checks.
pub const INVARIANCE_POINTS: usize = 16;
/// Orbit averages of a separating symbol closer than this mean the same torus.
pub const TORUS_SEPARATION: f64 = 1e-6;

fn check_level_set(dec: &HarmonicDecomposition, z0: &PhasePoint, energy: &[f64]) -> Result<()> {
    if z0.dim() != dec.dim() {
        return Err(Error::Validation(format!(
            "z0 has {} modes, the oscillator has {}",
            z0.dim(),
            dec.dim()
        )));
    }
    let actual = component_energies(dec, z0);
    for (n, (a, e)) in actual.iter().zip(energy).enumerate() {
        if (a - e).abs() > LEVEL_SET_TOL {
            return Err(Error::Validation(format!(
                "z0 is off the level set: ℋ_{}(z0) = {a} but E_{} = {e}",
                n + 1,
                n + 1
            )));
        }
    }
    Ok(())
}

/// A normalized joint eigenstate concentrating on the torus through `z0`.
pub fn build_scar(
    dec: &HarmonicDecomposition,
    z0: &PhasePoint,
    energy: &[f64],
    hbar: f64,
    tail_tol: f64,
) -> Result<ScarState> {
    check_level_set(dec, z0, energy)?;
    normalize_scar(dec, z0, energy, hbar, tail_tol)
}

/// `Σ_j √α_j ψ^j` over scars on distinct tori sharing one target eigenvalue.
#[derive(Debug, Clone)]
pub struct ConvexScar {
    pub state: FockState,
    pub parts: Vec<ScarState>,
    pub weights: Vec<f64>,
}

/// Errors unless the orbit averages of some separating symbol differ for
/// every pair of points.
pub fn check_distinct_tori(
    dec: &HarmonicDecomposition,
    points: &[PhasePoint],
    separating: &[Symbol],
) -> Result<()> {
    let averages: Vec<Vec<C64>> = points
        .iter()
        .map(|z| separating.iter().map(|a| orbit_average(dec, a, z)).collect())
        .collect::<Result<_>>()?;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let apart = averages[i]
                .iter()
                .zip(&averages[j])
                .any(|(a, b)| (a - b).norm() > TORUS_SEPARATION);
            if !apart {
                return Err(Error::Validation(format!(
                    "points {} and {} lie on the same torus for the separating symbols",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

pub fn convex_scar(
    dec: &HarmonicDecomposition,
    points: &[(PhasePoint, f64)],
    energy: &[f64],
    hbar: f64,
    tail_tol: f64,
    separating: &[Symbol],
) -> Result<ConvexScar> {
    if points.is_empty() {
        return Err(Error::Validation("convex combination needs at least one point".into()));
    }
    let total: f64 = points.iter().map(|p| p.1).sum();
    if (total - 1.0).abs() > 1e-12 || points.iter().any(|p| !(p.1 > 0.0 && p.1 <= 1.0)) {
        return Err(Error::Validation(format!(
            "weights must lie in (0, 1] and sum to 1, got {:?}",
            points.iter().map(|p| p.1).collect::<Vec<_>>()
        )));
    }
    let zs: Vec<PhasePoint> = points.iter().map(|p| p.0.clone()).collect();
    if points.len() > 1 {
        check_distinct_tori(dec, &zs, separating)?;
    }
    let parts = points
        .iter()
        .map(|(z, _)| build_scar(dec, z, energy, hbar, tail_tol))
        .collect::<Result<Vec<_>>>()?;
    let mut state = parts[0].state.scaled(C64::new(points[0].1.sqrt(), 0.0));
    for (part, (_, w)) in parts.iter().zip(points).skip(1) {
        state = state.axpy(C64::new(w.sqrt(), 0.0), &part.state)?;
    }
    Ok(ConvexScar {
        state,
        parts,
        weights: points.iter().map(|p| p.1).collect(),
    })
}

/// Localization and invariance residuals of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `‖(Op_ħ(ℋ_n) − E_n)ψ‖² / ‖ψ‖²`.
    pub concentration: Vec<f64>,
    /// `max_{t, a} |⟨Op_ħ(a ∘ φ^{ℋ_n}_t)⟩ − ⟨Op_ħ(a)⟩|` over the probes.
    pub invariance: Vec<f64>,
}

pub fn residuals(
    dec: &HarmonicDecomposition,
    state: &FockState,
    energy: &[f64],
    probes: &[Symbol],
) -> Result<Residuals> {
    let norm_sqr = state.norm_sqr();
    let mut concentration = Vec::with_capacity(dec.d_omega());
    let mut invariance = Vec::with_capacity(dec.d_omega());
    let base: Vec<C64> = probes
        .iter()
        .map(|a| expectation(state, state, a))
        .collect::<Result<_>>()?;
    for (n, e) in energy.iter().enumerate().take(dec.d_omega()) {
        let image = apply_polynomial(&component_operator(dec, n), state)?;
        let shifted = image.axpy(C64::new(-e, 0.0), state)?;
        concentration.push(shifted.norm_sqr() / norm_sqr);
        let period = dec.component(n).period;
        let mut worst = 0.0f64;
        for i in 0..INVARIANCE_POINTS {
            let t = period * i as f64 / INVARIANCE_POINTS as f64;
            for (a, b) in probes.iter().zip(&base) {
                let moved = expectation(state, state, &compose_flow(dec, a, n, t))?;
                worst = worst.max((moved - b).norm());
            }
        }
        invariance.push(worst);
    }
    Ok(Residuals {
        concentration,
        invariance,
    })
}
