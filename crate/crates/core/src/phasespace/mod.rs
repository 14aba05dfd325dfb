//! The classical oscillator: mode energies, the multi-flow of the periodic
//! components, orbit averages over the torus `ℛ_ω`, the set `Σ_ℋ` of
//! achievable energy vectors and Husimi densities.

mod husimi;
mod symbol;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use husimi::{husimi, ReducedDensity};
pub use symbol::{Character, Monomial, Polynomial, Symbol, MAX_DEGREE};

use crate::error::{Error, Result};
use crate::freqarith::HarmonicDecomposition;
use crate::C64;

/// Per-axis points for character orbit averages, checked against half as many.
pub const CHARACTER_POINTS: usize = 256;
/// Largest total quadrature grid.
pub const GRID_BUDGET: usize = 1 << 26;
/// Tolerance on `Σ_n E_n = 1` and on the linear feasibility solve.
pub const SIGMA_TOL: f64 = 1e-10;

/// A point `z = (x, ξ) ∈ R^{2d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::Validation(format!(
                "x has {} entries but ξ has {}",
                x.len(),
                xi.len()
            )));
        }
        if x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::Validation("phase point has a non-finite entry".into()));
        }
        Ok(PhasePoint { x, xi })
    }

    pub fn origin(d: usize) -> Self {
        PhasePoint {
            x: vec![0.0; d],
            xi: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `H_j(z) = (x_j² + ξ_j²)/2`.
    pub fn mode_energy(&self, j: usize) -> f64 {
        0.5 * (self.x[j] * self.x[j] + self.xi[j] * self.xi[j])
    }

    pub fn mode_energies(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.mode_energy(j)).collect()
    }

    /// Whether mode `j` is excited; `H_j(z) = 0` exactly when `x_j = ξ_j = 0`.
    pub fn excited(&self, j: usize) -> bool {
        self.x[j] != 0.0 || self.xi[j] != 0.0
    }

    /// Rotates mode `j` as `z_j ↦ e^{−iθ_j} z_j`.
    pub fn rotate(&self, theta: &[f64]) -> PhasePoint {
        let mut out = self.clone();
        for j in 0..self.dim() {
            let (s, c) = theta[j].sin_cos();
            out.x[j] = self.x[j] * c + self.xi[j] * s;
            out.xi[j] = -self.x[j] * s + self.xi[j] * c;
        }
        out
    }
}

/// `H(z) = Σ_j ω_j H_j(z)`.
pub fn hamiltonian(dec: &HarmonicDecomposition, z: &PhasePoint) -> f64 {
    dec.omega().iter().enumerate().map(|(j, w)| w * z.mode_energy(j)).sum()
}

/// `ℋ_n(z) = v_n Σ_j ν_{n,j} H_j(z)` for every component.
pub fn component_energies(dec: &HarmonicDecomposition, z: &PhasePoint) -> Vec<f64> {
    dec.components()
        .iter()
        .map(|c| (0..dec.dim()).map(|j| c.mode_frequency(j) * z.mode_energy(j)).sum())
        .collect()
}

/// Mode angles `θ_j(τ) = Σ_n v_n ν_{n,j} τ_n`.
pub fn flow_angles(dec: &HarmonicDecomposition, tau: &[f64]) -> Vec<f64> {
    (0..dec.dim())
        .map(|j| {
            dec.components()
                .iter()
                .zip(tau)
                .map(|(c, t)| c.mode_frequency(j) * t)
                .sum()
        })
        .collect()
}

/// Angles of the flow of `ℋ_n` at time `t`.
pub fn component_angles(dec: &HarmonicDecomposition, n: usize, t: f64) -> Vec<f64> {
    let c = dec.component(n);
    (0..dec.dim()).map(|j| c.mode_frequency(j) * t).collect()
}

/// `Φ_{z₀}(τ) = φ^{ℋ_1}_{τ_1} ∘ ⋯ ∘ φ^{ℋ_{d_ω}}_{τ_{d_ω}}(z₀)`.
pub fn multi_flow(dec: &HarmonicDecomposition, z0: &PhasePoint, tau: &[f64]) -> PhasePoint {
    z0.rotate(&flow_angles(dec, tau))
}

/// `a ∘ φ^{ℋ_n}_t`.
pub fn compose_flow(dec: &HarmonicDecomposition, a: &Symbol, n: usize, t: f64) -> Symbol {
    a.rotate(&component_angles(dec, n, t))
}

/// Mean of `a ∘ Φ_{z₀}` over `ℛ_ω = Π [0, T_n)`.
pub fn orbit_average(dec: &HarmonicDecomposition, a: &Symbol, z0: &PhasePoint) -> Result<C64> {
    match a {
        Symbol::Sum(parts) => parts
            .iter()
            .map(|(w, s)| Ok(w * orbit_average(dec, s, z0)?))
            .sum(),
        Symbol::Polynomial(p) => {
            let max_k = dec
                .components()
                .iter()
                .flat_map(|c| c.k.iter().map(|k| k.unsigned_abs()))
                .max()
                .unwrap_or(1) as usize;
            let points = 2 * p.degree() as usize * max_k + 16;
            torus_mean(dec, a, z0, points)
        }
        Symbol::Character(_) => {
            let fine = torus_mean(dec, a, z0, CHARACTER_POINTS)?;
            let coarse = torus_mean(dec, a, z0, CHARACTER_POINTS / 2)?;
            if (fine - coarse).norm() > 1e-9 {
                return Err(Error::Unresolved(format!(
                    "character orbit average not converged: {fine} vs {coarse}"
                )));
            }
            Ok(fine)
        }
    }
}

/// Trapezoid rule with `points` nodes per axis of `ℛ_ω`.
pub fn torus_mean(
    dec: &HarmonicDecomposition,
    a: &Symbol,
    z0: &PhasePoint,
    points: usize,
) -> Result<C64> {
    let d_omega = dec.d_omega();
    let total = points
        .checked_pow(d_omega as u32)
        .filter(|&t| t <= GRID_BUDGET)
        .ok_or_else(|| {
            Error::Resource(format!("{points}^{d_omega} quadrature nodes exceed {GRID_BUDGET}"))
        })?;
    let steps: Vec<f64> = dec.components().iter().map(|c| c.period / points as f64).collect();
    // Fixed-size chunks summed in order keep the result bit-reproducible.
    const CHUNK: usize = 4096;
    let partial: Vec<C64> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = C64::new(0.0, 0.0);
            let mut tau = vec![0.0; d_omega];
            for mut flat in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                for (t, h) in tau.iter_mut().zip(&steps) {
                    *t = (flat % points) as f64 * h;
                    flat /= points;
                }
                acc += a.eval(&multi_flow(dec, z0, &tau));
            }
            acc
        })
        .collect();
    let sum: C64 = partial.iter().sum();
    Ok(sum / total as f64)
}

/// An energy vector certified to lie in `Σ_ℋ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVector {
    pub values: Vec<f64>,
    /// `h ∈ R₊^d` with `ω·h = 1` and `v_n ν_n·h = E_n`.
    pub witness: Vec<f64>,
    /// Feasible vertices of the solution polytope.
    pub vertices: Vec<Vec<f64>>,
    /// The feasibility solve was done in floating point.
    pub numerical: bool,
}

impl EnergyVector {
    /// The point with `x_j = √(2h_j)`, `ξ_j = 0`.
    pub fn z0(&self) -> PhasePoint {
        PhasePoint {
            x: self.witness.iter().map(|h| (2.0 * h).sqrt()).collect(),
            xi: vec![0.0; self.witness.len()],
        }
    }
}

/// Decides `E ∈ Σ_ℋ` by enumerating the basic feasible solutions of
/// `v_n ν_n·h = E_n`, `h ≥ 0`; the witness is the mean of the vertices.
pub fn sigma_membership(dec: &HarmonicDecomposition, energy: &[f64]) -> Result<EnergyVector> {
    let d_omega = dec.d_omega();
    let d = dec.dim();
    if energy.len() != d_omega {
        return Err(Error::Validation(format!(
            "E has {} entries but d_omega = {d_omega}",
            energy.len()
        )));
    }
    if energy.iter().any(|e| !e.is_finite()) {
        return Err(Error::Validation("E has a non-finite entry".into()));
    }
    let total: f64 = energy.iter().sum();
    if (total - 1.0).abs() > SIGMA_TOL {
        return Err(Error::NotInSigma(format!("Σ E_n = {total} ≠ 1")));
    }
    let rows: Vec<Vec<f64>> = dec
        .components()
        .iter()
        .map(|c| (0..d).map(|j| c.mode_frequency(j)).collect())
        .collect();
    let scale = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for cols in combinations(d, d_omega) {
        let block = DMatrix::from_fn(d_omega, d_omega, |r, c| rows[r][cols[c]]);
        let lu = block.clone().lu();
        let det = lu.determinant();
        if det.abs() <= 1e-12 * scale.powi(d_omega as i32) {
            continue;
        }
        let Some(sol) = lu.solve(&DVector::from_column_slice(energy)) else {
            continue;
        };
        if sol.iter().any(|&h| h < -SIGMA_TOL) {
            continue;
        }
        let mut h = vec![0.0; d];
        for (c, &col) in cols.iter().enumerate() {
            h[col] = sol[c].max(0.0);
        }
        if !vertices
            .iter()
            .any(|v| v.iter().zip(&h).all(|(a, b)| (a - b).abs() <= SIGMA_TOL))
        {
            vertices.push(h);
        }
    }
    if vertices.is_empty() {
        return Err(Error::NotInSigma(format!(
            "no h ≥ 0 with ℋ-energies {energy:?}"
        )));
    }
    let mut witness = vec![0.0; d];
    for v in &vertices {
        for (w, h) in witness.iter_mut().zip(v) {
            *w += h / vertices.len() as f64;
        }
    }
    Ok(EnergyVector {
        values: energy.to_vec(),
        witness,
        vertices,
        numerical: true,
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}


#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::freqarith::exact::{q_int, Q};
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
    fn flow_examples() {
        let dec = sqrt2();
        let z = PhasePoint::new(vec![0.3, -0.8], vec![1.1, 0.2]).unwrap();
        assert_eq!(multi_flow(&dec, &z, &[0.0, 0.0]), z);
        for n in 0..2 {
            let mut tau = vec![0.0; 2];
            tau[n] = dec.component(n).period;
            let back = multi_flow(&dec, &z, &tau);
            for j in 0..2 {
                assert!((back.x[j] - z.x[j]).abs() < 1e-12);
                assert!((back.xi[j] - z.xi[j]).abs() < 1e-12);
            }
        }
        let half = multi_flow(&dec, &z, &[PI, 0.0]);
        assert!((half.x[0] + 0.3).abs() < 1e-15 && (half.xi[0] + 1.1).abs() < 1e-15);
        assert_eq!((half.x[1], half.xi[1]), (z.x[1], z.xi[1]));
    }

    #[test]
    fn orbit_average_examples() {
        let dec = sqrt2();
        let z = PhasePoint::new(vec![0.6, -0.2], vec![0.5, 0.9]).unwrap();
        let h1 = orbit_average(&dec, &Symbol::mode_energy(2, 0), &z).unwrap();
        assert!((h1.re - z.mode_energy(0)).abs() < 1e-14 && h1.im == 0.0);
        let x1 = orbit_average(&dec, &Symbol::x(2, 0), &z).unwrap();
        assert!(x1.norm() < 1e-15);
        let x1sq = orbit_average(&dec, &Symbol::parse("x1^2", 2).unwrap(), &z).unwrap();
        assert!((x1sq.re - z.mode_energy(0)).abs() < 1e-14);
    }

    #[test]
    fn orbit_average_of_character_is_bessel_product() {
        // Two independent rotations: the mean of e^{i r_j cos(θ+φ)} is J₀(r_j).
        let dec = sqrt2();
        let z = PhasePoint::new(vec![0.6, -0.2], vec![0.5, 0.9]).unwrap();
        let a = Symbol::character(vec![0.7, -1.3], vec![0.4, 0.25]).unwrap();
        let got = orbit_average(&dec, &a, &z).unwrap();
        let j0 = |r: f64| -> f64 {
            // Power series; r is small here.
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..60 {
                term *= -(r * r / 4.0) / (m * m) as f64;
                sum += term;
            }
            sum
        };
        let r: Vec<f64> = (0..2)
            .map(|j| {
                let zr = (z.x[j].powi(2) + z.xi[j].powi(2)).sqrt();
                let wr = (a_w(&a, j)).sqrt();
                zr * wr
            })
            .collect();
        let want = j0(r[0]) * j0(r[1]);
        assert!((got.re - want).abs() < 1e-13 && got.im.abs() < 1e-13, "{got} vs {want}");
    }

    fn a_w(a: &Symbol, j: usize) -> f64 {
        match a {
            Symbol::Character(c) => c.w_x[j].powi(2) + c.w_xi[j].powi(2),
            _ => unreachable!(),
        }
    }

    #[test]
    fn sigma_examples() {
        let dec = sqrt2();
        let e = sigma_membership(&dec, &[1.0, 0.0]).unwrap();
        assert!((e.witness[0] - 1.0).abs() < 1e-15 && e.witness[1] == 0.0);
        let z0 = e.z0();
        assert!((z0.x[0] - 2f64.sqrt()).abs() < 1e-15 && z0.x[1] == 0.0);
        let e = sigma_membership(&dec, &[0.5, 0.5]).unwrap();
        assert!((e.witness[0] - 0.5).abs() < 1e-15);
        assert!((e.witness[1] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(sigma_membership(&dec, &[0.7, 0.7]), Err(Error::NotInSigma(_))));
        assert!(matches!(sigma_membership(&dec, &[1.2, -0.2]), Err(Error::NotInSigma(_))));
        assert!(sigma_membership(&dec, &[1.0]).is_err());
    }

    #[test]
    fn sigma_witness_reproduces_energy() {
        let dec = rational(&[2, 3]);
        let e = sigma_membership(&dec, &[1.0]).unwrap();
        assert_eq!(e.vertices.len(), 2);
        let z0 = e.z0();
        assert!((component_energies(&dec, &z0)[0] - 1.0).abs() < 1e-14);
        assert!((hamiltonian(&dec, &z0) - 1.0).abs() < 1e-14);
        assert!(z0.excited(0) && z0.excited(1));
    }
}
