//! Husimi densities `|⟨coh(z)|ψ⟩|² / (2πħ)^d` and single-mode marginals.

use std::f64::consts::PI;

use super::PhasePoint;
use crate::error::{Error, Result};
use crate::fockstate::{coherent, coherent_mode, inner, FockState};
use crate::C64;

/// Truncation used for the probing coherent states.
const PROBE_TAIL: f64 = 1e-15;

pub fn husimi(state: &FockState, z: &PhasePoint) -> Result<f64> {
    if z.dim() != state.dim() {
        return Err(Error::Validation(format!(
            "point has {} modes, state has {}",
            z.dim(),
            state.dim()
        )));
    }
    let hbar = state.hbar();
    let probe = coherent(z, hbar, PROBE_TAIL)?;
    let overlap = inner(&probe, state)?;
    Ok(overlap.norm_sqr() / (2.0 * PI * hbar).powi(state.dim() as i32))
}

/// Reduced density matrix of one mode, `ρ_{mm'} = Σ_rest c_{m,rest} conj(c_{m',rest})`.
#[derive(Debug, Clone)]
pub struct ReducedDensity {
    hbar: f64,
    rho: Vec<Vec<C64>>,
}

impl ReducedDensity {
    pub fn new(state: &FockState, mode: usize) -> Result<Self> {
        if mode >= state.dim() {
            return Err(Error::Domain(format!(
                "mode {} out of range 1..={}",
                mode + 1,
                state.dim()
            )));
        }
        let size = state.cutoff()[mode] as usize + 1;
        let mut rho = vec![vec![C64::new(0.0, 0.0); size]; size];
        let mut fibers: std::collections::BTreeMap<Vec<u32>, Vec<(usize, C64)>> = Default::default();
        for (k, c) in state.entries()? {
            let mut rest = k.0.clone();
            let m = rest[mode] as usize;
            rest[mode] = 0;
            fibers.entry(rest).or_default().push((m, c));
        }
        for entries in fibers.values() {
            for &(m, a) in entries {
                for &(n, b) in entries {
                    rho[m][n] += a * b.conj();
                }
            }
        }
        Ok(ReducedDensity {
            hbar: state.hbar(),
            rho,
        })
    }

    /// `tr ρ`, the integral of the marginal over the plane.
    pub fn trace(&self) -> f64 {
        self.rho.iter().enumerate().map(|(i, r)| r[i].re).sum()
    }

    /// `⟨α|ρ|α⟩ / (2πħ)` at `(x, ξ)` in this mode.
    pub fn husimi(&self, x: f64, xi: f64) -> Result<f64> {
        let scale = (2.0 * self.hbar).sqrt();
        let (a, _) = coherent_mode(C64::new(x / scale, xi / scale), PROBE_TAIL)?;
        let n = a.len().min(self.rho.len());
        let mut total = C64::new(0.0, 0.0);
        for m in 0..n {
            let row: C64 = (0..n).map(|k| self.rho[m][k] * a[k]).sum();
            total += a[m].conj() * row;
        }
        Ok(total.re / (2.0 * PI * self.hbar))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FockIndex;

    #[test]
    fn peak_value() {
        let hbar = 0.05;
        let z = PhasePoint::new(vec![0.4, -0.1], vec![0.3, 0.2]).unwrap();
        let s = coherent(&z, hbar, 1e-14).unwrap();
        let v = husimi(&s, &z).unwrap();
        assert!((v * (2.0 * PI * hbar).powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_at_one_width() {
        let hbar = 0.1;
        let g = FockState::ground(1, hbar);
        let z = PhasePoint::new(vec![(2.0 * hbar).sqrt()], vec![0.0]).unwrap();
        let v = husimi(&g, &z).unwrap();
        assert!((v - (-1.0f64).exp() / (2.0 * PI * hbar)).abs() < 1e-12);
    }

    #[test]
    fn integrates_to_one() {
        // Number state in d = 1; trapezoid on a square that holds the ring.
        let hbar = 0.1;
        let s = FockState::basis(FockIndex(vec![3]), hbar);
        let half = 3.0;
        let n = 240;
        let h = 2.0 * half / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let z = PhasePoint::new(vec![-half + i as f64 * h], vec![-half + j as f64 * h]).unwrap();
                total += husimi(&s, &z).unwrap();
            }
        }
        total *= h * h;
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn marginal_matches_full_for_one_mode() {
        let hbar = 0.2;
        let z = PhasePoint::new(vec![0.5, 0.0], vec![-0.2, 0.0]).unwrap();
        let s = coherent(&z, hbar, 1e-14).unwrap();
        let rho = ReducedDensity::new(&s, 0).unwrap();
        assert!((rho.trace() - s.norm_sqr()).abs() < 1e-12);
        let p = PhasePoint::new(vec![0.3, 0.0], vec![0.1, 0.0]).unwrap();
        // Mode 2 is the ground state, so the full density at ξ₂ = x₂ = 0 is the
        // marginal divided by 2πħ.
        let full = husimi(&s, &p).unwrap();
        let marg = rho.husimi(0.3, 0.1).unwrap();
        assert!((full * 2.0 * PI * hbar - marg).abs() < 1e-12);
        assert!(ReducedDensity::new(&s, 2).is_err());
    }
}
