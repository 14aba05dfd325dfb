//! The joint spectrum of the periodic components.
//!
//! `Op_ħ(ℋ_n)` acts diagonally on the number basis with eigenvalue
//! `ħ(v_n ν_n·k + ν(n)/2) = ħ(2π(k·k(n))/T_n + ν(n)/2)`, so each component
//! level is labelled exactly by the integer rung `k·k(n)`. Total eigenvalues
//! of `Ĥ_ħ` are compared through exact generator coordinates.

mod lattice;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_traits::{FromPrimitive, Zero};

pub use lattice::{JointLattice, NODE_BUDGET};

use crate::csvout::{self, Table};
use crate::error::{Error, Result};
use crate::freqarith::exact::{q_frac, q_int, Q};
use crate::freqarith::HarmonicDecomposition;
use crate::phasespace::sigma_membership;

/// Energies with `|E_n|` at or below this are treated as `E_n = 0`.
/// Relative distance below which the level quotient counts as an integer
/// before rounding up.
pub const LEVEL_SNAP: f64 = 1e-12;

pub const ZERO_ENERGY: f64 = 1e-13;

/// A multi-index `k ∈ Z₊^d` of the number basis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockIndex(pub Vec<u32>);

impl FockIndex {
    pub fn zero(d: usize) -> Self {
        FockIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for FockIndex {
    fn from(v: Vec<u32>) -> Self {
        FockIndex(v)
    }
}

/// Eigenvalue `ħ(v_n ν_n·k + ν(n)/2)` of `Op_ħ(ℋ_n)` on `|k⟩`.
pub fn component_eigenvalue(
    dec: &HarmonicDecomposition,
    k: &FockIndex,
    n: usize,
    hbar: f64,
) -> Result<f64> {
    let c = dec.components().get(n).ok_or_else(|| {
        Error::Domain(format!("component {n} out of range (d_omega = {})", dec.d_omega()))
    })?;
    Ok(hbar * (c.rung_spacing() * c.rung(&k.0) as f64 + 0.5 * c.nu_trace))
}

/// Eigenvalue `ħ(ω·k + |ω|₁/2)` of `Ĥ_ħ` on `|k⟩`.
pub fn eigenvalue(dec: &HarmonicDecomposition, k: &FockIndex, hbar: f64) -> f64 {
    let omega = dec.omega();
    let dotk: f64 = omega.iter().zip(&k.0).map(|(w, &kj)| w * f64::from(kj)).sum();
    let l1: f64 = omega.iter().sum();
    hbar * (dotk + 0.5 * l1)
}

/// Generator coordinates of `ω·k + |ω|₁/2` (the eigenvalue divided by `ħ`).
pub fn eigenvalue_coords(dec: &HarmonicDecomposition, k: &FockIndex) -> Vec<Q> {
    let spec = dec.spec();
    let half = q_frac(1, 2);
    let l1 = spec.l1_coords();
    (0..spec.basis().len())
        .map(|i| {
            let dotk: Q = spec
                .coords()
                .iter()
                .zip(&k.0)
                .map(|(row, &kj)| &row[i] * q_int(i64::from(kj)))
                .sum();
            dotk + &l1[i] * &half
        })
        .collect()
}

/// The unique split of the eigenvalue of `|k⟩` into component eigenvalues.
pub fn decompose_eigenvalue(dec: &HarmonicDecomposition, k: &FockIndex, hbar: f64) -> Vec<f64> {
    (0..dec.d_omega())
        .map(|n| component_eigenvalue(dec, k, n, hbar).expect("n < d_omega"))
        .collect()
}

/// Exact generator coordinates of every component level of `|k⟩` (divided
/// by `ħ`).
pub fn decompose_eigenvalue_coords(dec: &HarmonicDecomposition, k: &FockIndex) -> Vec<Vec<Q>> {
    dec.components().iter().map(|c| c.level_coords(&k.0)).collect()
}

/// One eigenvalue of `Ĥ_ħ` and the number states spanning its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub value: f64,
    /// Generator coordinates of `value / ħ`.
    pub coords: Vec<Q>,
    pub members: Vec<FockIndex>,
}

impl Level {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// All eigenvalues of `Ĥ_ħ` in `[lo, hi]` with their eigenspaces, ascending.
pub fn enumerate_window(
    dec: &HarmonicDecomposition,
    hbar: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<Level>> {
    if !(hbar > 0.0) || !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::Domain(format!("bad window [{lo}, {hi}] at ħ = {hbar}")));
    }
    let omega = dec.omega();
    let l1: f64 = omega.iter().sum();
    let budget = hi / hbar - 0.5 * l1;
    let mut groups: BTreeMap<Vec<Q>, Vec<FockIndex>> = BTreeMap::new();
    if budget >= -1e-9 {
        let slack = 1e-9 * (1.0 + budget.abs());
        let mut k = vec![0u32; omega.len()];
        let mut nodes = 0u64;
        let mut found = Vec::new();
        collect(omega, 0, 0.0, budget + slack, &mut k, &mut found, &mut nodes)?;
        for k in found {
            groups.entry(eigenvalue_coords(dec, &k)).or_default().push(k);
        }
    }
    let basis = dec.spec().basis();
    let lo_q = Q::from_f64(lo / hbar).unwrap_or_else(Q::zero);
    let hi_q = Q::from_f64(hi / hbar).unwrap_or_else(Q::zero);
    let mut levels: Vec<Level> = groups
        .into_iter()
        .filter(|(coords, _)| {
            let exact = basis.evaluate(coords);
            exact >= lo_q && exact <= hi_q
        })
        .map(|(coords, mut members)| {
            members.sort();
            Level {
                value: hbar * basis.evaluate_f64(&coords),
                coords,
                members,
            }
        })
        .collect();
    levels.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.coords.cmp(&b.coords)));
    Ok(levels)
}

fn collect(
    omega: &[f64],
    j: usize,
    used: f64,
    budget: f64,
    k: &mut Vec<u32>,
    out: &mut Vec<FockIndex>,
    nodes: &mut u64,
) -> Result<()> {
    *nodes += 1;
    if *nodes > NODE_BUDGET {
        return Err(Error::Resource(format!(
            "window contains more than {NODE_BUDGET} lattice points"
        )));
    }
    if j == omega.len() {
        out.push(FockIndex(k.clone()));
        return Ok(());
    }
    let max = ((budget - used) / omega[j]).floor().max(0.0) as u32;
    for v in 0..=max {
        k[j] = v;
        collect(omega, j + 1, used + omega[j] * f64::from(v), budget, k, out, nodes)?;
    }
    k[j] = 0;
    Ok(())
}

/// CSV with columns `k1..kd, lambda, lambda_1..lambda_{d_ω}`, one row per
/// number state.
pub fn levels_csv(dec: &HarmonicDecomposition, levels: &[Level], hbar: f64, comments: &[String]) -> String {
    let mut columns: Vec<String> = (1..=dec.dim()).map(|j| format!("k{j}")).collect();
    columns.push("lambda".into());
    columns.extend((1..=dec.d_omega()).map(|n| format!("lambda_{n}")));
    let mut table = Table::new(comments, &columns);
    for level in levels {
        for k in &level.members {
            let mut cells: Vec<String> = k.0.iter().map(|x| x.to_string()).collect();
            cells.push(csvout::num(level.value));
            cells.extend(decompose_eigenvalue(dec, k, hbar).into_iter().map(csvout::num));
            table.row(cells);
        }
    }
    table.finish()
}

/// A joint eigenvalue `Λ_ħ = (λ^1, …, λ^{d_ω})` approximating `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetEigenvalue {
    pub energy: Vec<f64>,
    pub hbar: f64,
    /// `N(ħ, n)`.
    pub levels: Vec<i64>,
    /// `sign E_n`, or 0 when `E_n = 0`.
    pub sigma: Vec<i8>,
    /// `σ_n N(ħ, n)`, the rung `k·k(n)` shared by the joint eigenspace.
    pub rungs: Vec<i64>,
    pub lambda: Vec<f64>,
    pub lambda_total: f64,
    /// A number state in the joint eigenspace.
    pub witness: FockIndex,
    pub hbar0: f64,
}

impl TargetEigenvalue {
    /// The target whose joint eigenspace contains `|k⟩`, with `E = Λ`.
    pub fn of_index(dec: &HarmonicDecomposition, k: &FockIndex, hbar: f64) -> Self {
        let rungs: Vec<i64> = dec.components().iter().map(|c| c.rung(&k.0)).collect();
        let lambda = decompose_eigenvalue(dec, k, hbar);
        TargetEigenvalue {
            energy: lambda.clone(),
            hbar,
            levels: rungs.iter().map(|r| r.abs()).collect(),
            sigma: rungs.iter().map(|r| r.signum() as i8).collect(),
            lambda_total: lambda.iter().sum(),
            lambda,
            rungs,
            witness: k.clone(),
            hbar0: f64::INFINITY,
        }
    }

    /// Whether `|k⟩` lies in the joint eigenspace.
    pub fn contains(&self, dec: &HarmonicDecomposition, k: &[u32]) -> bool {
        dec.components()
            .iter()
            .zip(&self.rungs)
            .all(|(c, &r)| c.rung(k) == r)
    }

    /// `|E_n − λ^n| < 2πħ/T_n` for every `n`.
    pub fn within_bound(&self, dec: &HarmonicDecomposition) -> bool {
        dec.components()
            .iter()
            .zip(self.energy.iter().zip(&self.lambda))
            .all(|(c, (e, l))| (e - l).abs() < c.rung_spacing() * self.hbar)
    }
}

fn sign_of(e: f64) -> i8 {
    if e.abs() <= ZERO_ENERGY {
        0
    } else if e > 0.0 {
        1
    } else {
        -1
    }
}

/// Largest `ħ` for which every `N(ħ, n)` with `E_n ≠ 0` reaches its
/// conductor (valid for `ħ < ħ₀`; infinite when unconstrained).
pub fn hbar0(dec: &HarmonicDecomposition, energy: &[f64]) -> Result<f64> {
    let mut bound = f64::INFINITY;
    for (c, &e) in dec.components().iter().zip(energy) {
        let sigma = sign_of(e);
        if sigma == 0 {
            continue;
        }
        let conductor = c.conductor(sigma)? as f64;
        let base = c.rung_spacing() * (conductor - 1.0);
        let rhs = if sigma > 0 {
            base + 0.5 * c.nu_trace
        } else {
            base - 0.5 * c.nu_trace
        };
        if rhs > 0.0 {
            bound = bound.min(e.abs() / rhs);
        }
    }
    Ok(bound)
}

/// Chooses `N(ħ, n) = ⌈σ_n (T_n/2π)(E_n/ħ − ν(n)/2)⌉` (0 when `E_n = 0`)
/// and certifies the joint eigenspace with a witness.
pub fn select_target(dec: &HarmonicDecomposition, energy: &[f64], hbar: f64) -> Result<TargetEigenvalue> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::Domain(format!("ħ must be positive, got {hbar}")));
    }
    sigma_membership(dec, energy)?;
    let h0 = hbar0(dec, energy)?;
    let d_omega = dec.d_omega();
    let mut levels = Vec::with_capacity(d_omega);
    let mut sigmas = Vec::with_capacity(d_omega);
    let mut rungs = Vec::with_capacity(d_omega);
    let mut lambda = Vec::with_capacity(d_omega);
    for (n, (c, &e)) in dec.components().iter().zip(energy).enumerate() {
        let sigma = sign_of(e);
        let level = if sigma == 0 {
            0
        } else {
            let x = f64::from(sigma) * (c.period / (2.0 * PI)) * (e / hbar - 0.5 * c.nu_trace);
            let nearest = x.round();
            let level = if (x - nearest).abs() <= LEVEL_SNAP * nearest.abs().max(1.0) {
                nearest as i64
            } else {
                x.ceil() as i64
            };
            let conductor = c.conductor(sigma)?;
            if level < conductor as i64 {
                return Err(Error::BelowConductor {
                    component: n + 1,
                    hbar,
                    hbar0: h0,
                    level,
                    conductor,
                });
            }
            level
        };
        let rung = i64::from(sigma) * level;
        levels.push(level);
        sigmas.push(sigma);
        rungs.push(rung);
        lambda.push(hbar * (c.rung_spacing() * rung as f64 + 0.5 * c.nu_trace));
    }
    let lambda_total = lambda.iter().sum();
    let mut target = TargetEigenvalue {
        energy: energy.to_vec(),
        hbar,
        levels,
        sigma: sigmas,
        rungs,
        lambda,
        lambda_total,
        witness: FockIndex::zero(dec.dim()),
        hbar0: h0,
    };
    if !target.within_bound(dec) {
        return Err(Error::Consistency(format!(
            "target {:?} violates |E_n − λ^n| < 2πħ/T_n for E = {energy:?}",
            target.lambda
        )));
    }
    let found = joint_eigenspace(dec, &target, None, 1)?;
    target.witness = found.into_iter().next().ok_or_else(|| {
        Error::Consistency(format!(
            "no number state has rungs {:?}: the joint eigenspace is empty",
            target.rungs
        ))
    })?;
    Ok(target)
}

/// Number states of the joint eigenspace of `target`, optionally restricted
/// to `k_j ≤ cutoff[j]`.
pub fn joint_eigenspace(
    dec: &HarmonicDecomposition,
    target: &TargetEigenvalue,
    cutoff: Option<&[u32]>,
    limit: usize,
) -> Result<Vec<FockIndex>> {
    let lattice = JointLattice::new(dec)?;
    let omega = dec.omega();
    let l1: f64 = omega.iter().sum();
    let weight = target.lambda_total / target.hbar - 0.5 * l1;
    if weight < -1e-9 {
        return Ok(Vec::new());
    }
    let max_weight = weight + 1e-9 * (1.0 + weight.abs());
    let upper: Vec<u32> = omega
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let by_weight = (max_weight / w).floor().clamp(0.0, u32::MAX as f64) as u32;
            cutoff.map_or(by_weight, |c| c[j].min(by_weight))
        })
        .collect();
    lattice.enumerate(&target.rungs, &upper, omega, max_weight, limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freqarith::{decompose, FrequencySpec, GeneratorBasis};

    fn sqrt2() -> HarmonicDecomposition {
        let spec = FrequencySpec::new(
            GeneratorBasis::unit_and_roots(&[2]),
            vec![vec![q_int(1), q_int(0)], vec![q_int(0), q_int(1)]],
        )
        .unwrap();
        decompose(&spec).unwrap()
    }

    fn rational(w: &[i64]) -> HarmonicDecomposition {
        let qs: Vec<Q> = w.iter().map(|&x| q_int(x)).collect();
        decompose(&FrequencySpec::rational(&qs).unwrap()).unwrap()
    }

    #[test]
    fn component_eigenvalue_examples() {
        let one = rational(&[1]);
        assert!((component_eigenvalue(&one, &FockIndex(vec![0]), 0, 0.3).unwrap() - 0.15).abs() < 1e-16);
        let dec = sqrt2();
        let k = FockIndex(vec![2, 1]);
        assert!((component_eigenvalue(&dec, &k, 0, 0.1).unwrap() - 0.25).abs() < 1e-15);
        let second = component_eigenvalue(&dec, &k, 1, 0.1).unwrap();
        assert!((second - 0.1 * 2f64.sqrt() * 1.5).abs() < 1e-15);
        assert!((second - 0.21213203435596426).abs() < 1e-15);
        assert!(component_eigenvalue(&dec, &k, 2, 0.1).is_err());
    }

    #[test]
    fn window_examples() {
        let ones = rational(&[1, 1]);
        let levels = enumerate_window(&ones, 1.0, 1.9, 2.1).unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].value - 2.0).abs() < 1e-15);
        assert_eq!(levels[0].members, vec![FockIndex(vec![0, 1]), FockIndex(vec![1, 0])]);

        assert!(enumerate_window(&ones, 1.0, 0.0, 0.9).unwrap().is_empty());

        let dec = sqrt2();
        let levels = enumerate_window(&dec, 1.0, 2.2, 2.3).unwrap();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[0].members, vec![FockIndex(vec![1, 0])]);
        assert!((levels[0].value - 2.2071067811865475).abs() < 1e-14);
        assert!(enumerate_window(&dec, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn window_budget() {
        let ones = rational(&[1, 1, 1, 1]);
        assert!(matches!(
            enumerate_window(&ones, 1e-3, 0.0, 1.0),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn select_target_sqrt2() {
        let dec = sqrt2();
        let t = select_target(&dec, &[1.0, 0.0], 0.1).unwrap();
        assert_eq!(t.levels, vec![10, 0]);
        assert!((t.lambda[0] - 1.05).abs() < 1e-14);
        assert!((t.lambda[1] - 0.1 * 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((t.energy[0] - t.lambda[0]).abs() < 0.1);
        assert_eq!(t.witness, FockIndex(vec![10, 0]));
        assert!(t.within_bound(&dec));
    }

    #[test]
    fn energy_on_a_rung_is_hit_exactly() {
        let dec = sqrt2();
        for hbar in [0.2, 0.1 / 1.5, 0.04] {
            let t = select_target(&dec, &[0.5, 0.5], hbar).unwrap();
            assert!((t.lambda[0] - 0.5).abs() < 1e-12, "{hbar}: {:?}", t.lambda);
        }
    }

    #[test]
    fn below_conductor() {
        let dec = rational(&[2, 3]);
        // E = 1 on the unit shell; ħ large enough that N falls under 2.
        let err = select_target(&dec, &[1.0], 0.45).unwrap_err();
        assert!(matches!(err, Error::BelowConductor { .. }), "{err}");
        let h0 = hbar0(&dec, &[1.0]).unwrap();
        assert!(select_target(&dec, &[1.0], 0.99 * h0).is_ok());
        assert!(select_target(&dec, &[1.0], 1.01 * h0).is_err());
    }

    #[test]
    fn decomposition_is_unique_in_window() {
        let spec = FrequencySpec::new(
            GeneratorBasis::unit_and_roots(&[2]),
            vec![
                vec![q_int(1), q_int(0)],
                vec![q_int(1), q_int(0)],
                vec![q_int(0), q_int(1)],
            ],
        )
        .unwrap();
        let dec = decompose(&spec).unwrap();
        let levels = enumerate_window(&dec, 0.1, 0.0, 2.0).unwrap();
        let all: Vec<&FockIndex> = levels.iter().flat_map(|l| &l.members).collect();
        for a in &all {
            for b in &all {
                if eigenvalue_coords(&dec, a) == eigenvalue_coords(&dec, b) {
                    assert_eq!(
                        decompose_eigenvalue_coords(&dec, a),
                        decompose_eigenvalue_coords(&dec, b)
                    );
                }
            }
        }
        assert!(levels.iter().any(|l| l.multiplicity() > 1));
    }

    #[test]
    fn two_three_decomposition_is_total() {
        let dec = rational(&[2, 3]);
        let k = FockIndex(vec![3, 4]);
        let parts = decompose_eigenvalue(&dec, &k, 0.2);
        assert_eq!(parts.len(), 1);
        assert!((parts[0] - eigenvalue(&dec, &k, 0.2)).abs() < 1e-14);
    }
}
