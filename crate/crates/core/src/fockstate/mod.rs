//! States in the joint number basis `|k⟩`, `k ∈ Z₊^d`.
//!
//! Coherent states are stored as tensor products of per-mode amplitude
//! vectors so that a `d`-mode packet with hundreds of quanta per mode is never
//! expanded; everything derived from them (projections, operator images) is
//! sparse.

mod io;
mod ops;
mod scar;

use std::collections::BTreeMap;

use num_complex::Complex64;

pub use ops::{
    apply_character, apply_polynomial, component_operator, displacement_matrix, eigen_residual,
    expectation,
};
pub use scar::{gram, normalize_scar, GramInfo, ScarState};

use crate::error::{Error, Result};
use crate::freqarith::HarmonicDecomposition;
use crate::phasespace::PhasePoint;
use crate::spectral::{self, FockIndex, TargetEigenvalue};
use crate::C64;

/// Largest number of explicit coefficients a state may hold.
pub const MATERIALIZE_BUDGET: usize = 10_000_000;
/// Largest per-mode cutoff for coherent states.
pub const MAX_MODE_CUTOFF: u32 = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    /// `c_k = Π_j a_j[k_j]`.
    Product(Vec<Vec<C64>>),
    Sparse(BTreeMap<FockIndex, C64>),
}

/// A truncated state `Σ_k c_k |k⟩` at a fixed `ħ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    hbar: f64,
    cutoff: Vec<u32>,
    /// Upper bound on the squared norm discarded by truncation.
    tail: f64,
    coeffs: Coefficients,
}

impl FockState {
    pub fn ground(d: usize, hbar: f64) -> Self {
        FockState {
            hbar,
            cutoff: vec![0; d],
            tail: 0.0,
            coeffs: Coefficients::Product(vec![vec![C64::new(1.0, 0.0)]; d]),
        }
    }

    pub fn basis(k: FockIndex, hbar: f64) -> Self {
        let mut map = BTreeMap::new();
        let d = k.dim();
        map.insert(k, C64::new(1.0, 0.0));
        FockState::from_sparse(d, hbar, map, 0.0)
    }

    /// Builds a sparse state; the cutoff is the per-mode maximum of the
    /// support.
    pub fn from_sparse(d: usize, hbar: f64, map: BTreeMap<FockIndex, C64>, tail: f64) -> Self {
        let mut cutoff = vec![0u32; d];
        for k in map.keys() {
            for (c, &kj) in cutoff.iter_mut().zip(&k.0) {
                *c = (*c).max(kj);
            }
        }
        FockState {
            hbar,
            cutoff,
            tail,
            coeffs: Coefficients::Sparse(map),
        }
    }

    pub fn from_product(hbar: f64, modes: Vec<Vec<C64>>, tail: f64) -> Self {
        let cutoff = modes.iter().map(|m| m.len().saturating_sub(1) as u32).collect();
        FockState {
            hbar,
            cutoff,
            tail,
            coeffs: Coefficients::Product(modes),
        }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.cutoff.len()
    }

    pub fn cutoff(&self) -> &[u32] {
        &self.cutoff
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn get(&self, k: &[u32]) -> C64 {
        match &self.coeffs {
            Coefficients::Product(modes) => modes
                .iter()
                .zip(k)
                .map(|(a, &kj)| a.get(kj as usize).copied().unwrap_or_default())
                .product(),
            Coefficients::Sparse(map) => map.get(&FockIndex(k.to_vec())).copied().unwrap_or_default(),
        }
    }

    /// Number of explicit coefficients once expanded.
    pub fn support_size(&self) -> usize {
        match &self.coeffs {
            Coefficients::Product(modes) => modes
                .iter()
                .map(|m| m.len())
                .try_fold(1usize, |acc, n| acc.checked_mul(n))
                .unwrap_or(usize::MAX),
            Coefficients::Sparse(map) => map.len(),
        }
    }

    /// All coefficients as a sorted map.
    pub fn entries(&self) -> Result<BTreeMap<FockIndex, C64>> {
        match &self.coeffs {
            Coefficients::Sparse(map) => Ok(map.clone()),
            Coefficients::Product(modes) => {
                let total = self.support_size();
                if total > MATERIALIZE_BUDGET {
                    return Err(Error::Resource(format!(
                        "expanding a product state needs {total} coefficients (budget {MATERIALIZE_BUDGET})"
                    )));
                }
                let mut map = BTreeMap::new();
                let mut k = vec![0u32; modes.len()];
                for mut flat in 0..total {
                    let mut c = C64::new(1.0, 0.0);
                    for j in (0..modes.len()).rev() {
                        let n = modes[j].len();
                        k[j] = (flat % n) as u32;
                        flat /= n;
                        c *= modes[j][k[j] as usize];
                    }
                    if c != C64::new(0.0, 0.0) {
                        map.insert(FockIndex(k.clone()), c);
                    }
                }
                Ok(map)
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match &self.coeffs {
            Coefficients::Product(modes) => modes
                .iter()
                .map(|m| m.iter().map(|c| c.norm_sqr()).sum::<f64>())
                .product(),
            Coefficients::Sparse(map) => map.values().map(|c| c.norm_sqr()).sum(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, s: C64) -> FockState {
        let coeffs = match &self.coeffs {
            Coefficients::Product(modes) => {
                let mut modes = modes.clone();
                if let Some(first) = modes.first_mut() {
                    for c in first.iter_mut() {
                        *c *= s;
                    }
                }
                Coefficients::Product(modes)
            }
            Coefficients::Sparse(map) => {
                Coefficients::Sparse(map.iter().map(|(k, c)| (k.clone(), c * s)).collect())
            }
        };
        FockState {
            coeffs,
            ..self.clone()
        }
    }

    /// `self + s·other` as a sparse state.
    pub fn axpy(&self, s: C64, other: &FockState) -> Result<FockState> {
        check_hbar(self, other)?;
        let mut map = self.entries()?;
        for (k, c) in other.entries()? {
            *map.entry(k).or_default() += s * c;
        }
        Ok(FockState::from_sparse(
            self.dim(),
            self.hbar,
            map,
            self.tail + s.norm_sqr() * other.tail,
        ))
    }
}

pub(crate) fn check_hbar(a: &FockState, b: &FockState) -> Result<()> {
    if a.hbar != b.hbar {
        return Err(Error::Validation(format!(
            "states at different ħ: {} and {}",
            a.hbar, b.hbar
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::Validation(format!(
            "states of different dimension: {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `⟨bra|ket⟩`.
pub fn inner(bra: &FockState, ket: &FockState) -> Result<C64> {
    check_hbar(bra, ket)?;
    Ok(match (&bra.coeffs, &ket.coeffs) {
        (Coefficients::Product(a), Coefficients::Product(b)) => a
            .iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum::<C64>())
            .product(),
        (Coefficients::Sparse(map), _) => map.iter().map(|(k, c)| c.conj() * ket.get(&k.0)).sum(),
        (_, Coefficients::Sparse(map)) => map.iter().map(|(k, c)| bra.get(&k.0).conj() * c).sum(),
    })
}

/// Per-mode amplitudes `e^{−|α|²/2} α^k/√k!` for `k ≤ K`, with `K` the first
/// index whose Poisson tail is provably below `tol`. Returns the amplitudes
/// and the tail bound.
///
/// Magnitudes are propagated by the ratio `√(μ/(k+1))` outward from the
/// Poisson mode `k₀ = ⌊μ⌋`, whose weight comes from Stirling's series, so the
/// relative error stays near machine precision even for `μ` in the thousands.
pub fn coherent_mode(alpha: C64, tol: f64) -> Result<(Vec<C64>, f64)> {
    let mu = alpha.norm_sqr();
    if mu == 0.0 {
        return Ok((vec![C64::new(1.0, 0.0)], 0.0));
    }
    let k0 = mu.floor();
    if k0 > f64::from(MAX_MODE_CUTOFF) {
        return Err(Error::Resource(format!(
            "|α|² = {mu} needs a mode cutoff above {MAX_MODE_CUTOFF}"
        )));
    }
    let k0 = k0 as u32;
    let mut mags = vec![0.0f64; k0 as usize + 1];
    mags[k0 as usize] = (0.5 * ln_poisson(mu, k0)).exp();
    for k in (0..k0).rev() {
        mags[k as usize] = mags[k as usize + 1] * (f64::from(k + 1) / mu).sqrt();
    }
    let mut k = k0;
    loop {
        let next = k + 1;
        let m_next = mags[k as usize] * (mu / f64::from(next)).sqrt();
        // Σ_{j>k} p_j ≤ p_{k+1} / (1 − μ/(k+2)) once k + 2 > μ.
        let ratio = mu / (f64::from(next) + 1.0);
        if ratio < 1.0 {
            let bound = m_next * m_next / (1.0 - ratio);
            if bound < tol {
                let phase = alpha.arg();
                let amps = mags
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| Complex64::from_polar(m, i as f64 * phase))
                    .collect();
                return Ok((amps, bound));
            }
        }
        if next > MAX_MODE_CUTOFF {
            return Err(Error::Resource(format!(
                "|α|² = {mu} needs a mode cutoff above {MAX_MODE_CUTOFF}"
            )));
        }
        mags.push(m_next);
        k = next;
    }
}

/// `ln(e^{−μ} μ^k / k!)`.
fn ln_poisson(mu: f64, k: u32) -> f64 {
    if k < 20 {
        let ln_fact: f64 = (1..=k).map(|i| f64::from(i).ln()).sum();
        return -mu + f64::from(k) * mu.ln() - ln_fact;
    }
    let kf = f64::from(k);
    // k ln(μ/k) + k − μ = −k·g(μ/k − 1) with g(u) = u − ln(1+u).
    let u = (mu - kf) / kf;
    let g = u - u.ln_1p();
    let k2 = kf * kf;
    let series = 1.0 / (12.0 * kf) - 1.0 / (360.0 * kf * k2) + 1.0 / (1260.0 * kf * k2 * k2);
    -kf * g - 0.5 * (2.0 * std::f64::consts::PI * kf).ln() - series
}

/// The coherent state centred at `z0`, `α_j = (x_j + iξ_j)/√(2ħ)`.
pub fn coherent(z0: &PhasePoint, hbar: f64, tail_tol: f64) -> Result<FockState> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::Domain(format!("tail_tol must lie in (0, 1), got {tail_tol}")));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::Domain(format!("ħ must be positive, got {hbar}")));
    }
    let d = z0.dim();
    let scale = (2.0 * hbar).sqrt();
    let mut modes = Vec::with_capacity(d);
    let mut tail = 0.0;
    for j in 0..d {
        let alpha = C64::new(z0.x[j] / scale, z0.xi[j] / scale);
        let (amps, t) = coherent_mode(alpha, tail_tol / d as f64)?;
        tail += t;
        modes.push(amps);
    }
    Ok(FockState::from_product(hbar, modes, tail))
}

/// Keeps the coefficients of `state` in the joint eigenspace of `target`.
/// Averaging `e^{−iτ·(Op_ħ(ℋ) − Λ_ħ)/ħ}` over `ℛ_ω` multiplies `c_k` by
/// `Π_n (1/T_n)∫_0^{T_n} e^{2πi t (r_n − k·k(n))/T_n} dt`, which is 1 on the
/// joint eigenspace and 0 elsewhere.
pub fn average_project(
    dec: &HarmonicDecomposition,
    state: &FockState,
    target: &TargetEigenvalue,
) -> Result<FockState> {
    if state.hbar != target.hbar {
        return Err(Error::Validation(format!(
            "state at ħ = {} but target at ħ = {}",
            state.hbar, target.hbar
        )));
    }
    let map: BTreeMap<FockIndex, C64> = match &state.coeffs {
        Coefficients::Product(_) => {
            let ks = spectral::joint_eigenspace(dec, target, Some(&state.cutoff), MATERIALIZE_BUDGET)?;
            if ks.len() >= MATERIALIZE_BUDGET {
                return Err(Error::Resource(format!(
                    "joint eigenspace has at least {MATERIALIZE_BUDGET} points inside the cutoff"
                )));
            }
            ks.into_iter()
                .map(|k| {
                    let c = state.get(&k.0);
                    (k, c)
                })
                .filter(|(_, c)| c.norm_sqr() > 0.0)
                .collect()
        }
        Coefficients::Sparse(map) => map
            .iter()
            .filter(|(k, c)| c.norm_sqr() > 0.0 && target.contains(dec, &k.0))
            .map(|(k, c)| (k.clone(), *c))
            .collect(),
    };
    if map.is_empty() {
        return Err(Error::EmptyProjection(nearest_levels(dec, state, target)));
    }
    Ok(FockState::from_sparse(state.dim(), state.hbar, map, state.tail))
}

fn nearest_levels(dec: &HarmonicDecomposition, state: &FockState, target: &TargetEigenvalue) -> String {
    let hbar = state.hbar;
    let spread = dec
        .components()
        .iter()
        .map(|c| c.rung_spacing())
        .fold(0.0f64, f64::max)
        * hbar
        * 3.0;
    let lo = (target.lambda_total - spread).max(0.0);
    let hi = target.lambda_total + spread;
    let mut near: Vec<String> = spectral::enumerate_window(dec, hbar, lo, hi)
        .map(|levels| {
            levels
                .iter()
                .filter(|l| l.members.iter().any(|k| k.0.iter().zip(&state.cutoff).all(|(a, b)| a <= b)))
                .map(|l| format!("{:.6} (k = {:?})", l.value, l.members[0].0))
                .collect()
        })
        .unwrap_or_default();
    near.truncate(5);
    format!(
        "no support on the joint eigenspace with rungs {:?} (Λ = {:.6}); nearby eigenvalues in the cutoff box: [{}]",
        target.rungs,
        target.lambda_total,
        near.join(", ")
    )
}
