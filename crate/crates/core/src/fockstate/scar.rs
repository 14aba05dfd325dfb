//! Normalized scarred eigenstates and the normalization constant `c_ħ`.

use nalgebra::DMatrix;

use super::{average_project, coherent, FockState};
use crate::error::{Error, Result};
use crate::freqarith::exact::{rank, Q};
use crate::freqarith::{decompose, FrequencySpec, HarmonicDecomposition};
use crate::phasespace::PhasePoint;
use crate::spectral::{select_target, TargetEigenvalue};
use crate::C64;

/// The Gram matrix `𝒢 = (dℋ)(dℋ)ᵀ` at a point, or its counterpart for the
/// oscillator restricted to the excited modes when the gradients are
/// dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct GramInfo {
    /// `d₀`, the rank of the gradients `∇ℋ_n(z₀)`.
    pub rank: usize,
    pub matrix: Vec<Vec<f64>>,
    pub det: f64,
    /// Modes with `H_j(z₀) > 0`.
    pub excited: Vec<usize>,
    /// Decomposition of the excited modes, present when `d₀ < d_ω`.
    pub restricted: Option<HarmonicDecomposition>,
    /// `|ℛ_ω|`, or the restricted torus volume when `d₀ < d_ω`.
    pub torus_volume: f64,
}

fn gram_of(rows: &[Vec<f64>], z0: &PhasePoint, modes: &[usize]) -> (Vec<Vec<f64>>, f64) {
    let size = rows.len();
    let m = DMatrix::from_fn(size, size, |a, b| {
        modes
            .iter()
            .enumerate()
            .map(|(i, &j)| rows[a][i] * rows[b][i] * 2.0 * z0.mode_energy(j))
            .sum()
    });
    let matrix = (0..size).map(|a| (0..size).map(|b| m[(a, b)]).collect()).collect();
    (matrix, m.determinant())
}

pub fn gram(dec: &HarmonicDecomposition, z0: &PhasePoint) -> Result<GramInfo> {
    let excited: Vec<usize> = (0..dec.dim()).filter(|&j| z0.excited(j)).collect();
    if excited.is_empty() {
        return Ok(GramInfo {
            rank: 0,
            matrix: Vec::new(),
            det: 1.0,
            excited,
            restricted: None,
            torus_volume: 1.0,
        });
    }
    let projected: Vec<Vec<Q>> = dec
        .components()
        .iter()
        .map(|c| excited.iter().map(|&j| c.nu[j].clone()).collect())
        .collect();
    let d0 = rank(&projected);
    if d0 == dec.d_omega() {
        let rows: Vec<Vec<f64>> = dec
            .components()
            .iter()
            .map(|c| excited.iter().map(|&j| c.mode_frequency(j)).collect())
            .collect();
        let (matrix, det) = gram_of(&rows, z0, &excited);
        return Ok(GramInfo {
            rank: d0,
            matrix,
            det,
            excited,
            restricted: None,
            torus_volume: dec.torus_volume(),
        });
    }
    let spec = dec.spec();
    let sub = FrequencySpec::new(
        spec.basis().clone(),
        excited.iter().map(|&j| spec.coords()[j].clone()).collect(),
    )?;
    let restricted = decompose(&sub)?;
    if restricted.d_omega() != d0 {
        return Err(Error::Consistency(format!(
            "restricted decomposition has {} components, expected {d0}",
            restricted.d_omega()
        )));
    }
    let rows: Vec<Vec<f64>> = restricted
        .components()
        .iter()
        .map(|c| (0..excited.len()).map(|i| c.mode_frequency(i)).collect())
        .collect();
    let (matrix, det) = gram_of(&rows, z0, &excited);
    Ok(GramInfo {
        rank: d0,
        matrix,
        det,
        torus_volume: restricted.torus_volume(),
        excited,
        restricted: Some(restricted),
    })
}

/// A unit-norm joint eigenstate built from a coherent state at `z0`.
#[derive(Debug, Clone)]
pub struct ScarState {
    pub state: FockState,
    pub target: TargetEigenvalue,
    pub z0: PhasePoint,
    /// `|ℛ|√det 𝒢 ‖⟨Ψ⟩‖² / (4πħ)^{d₀/2}`, or 1 when `z0 = 0`.
    pub c_hbar: f64,
    pub rank_d0: usize,
    pub gram_det: f64,
    /// `‖⟨Ψ⟩‖²` before normalization.
    pub projected_norm_sqr: f64,
}

/// Coherent state at `z0`, projected onto the joint eigenspace of the target
/// chosen for `energy`, then normalized.
pub fn normalize_scar(
    dec: &HarmonicDecomposition,
    z0: &PhasePoint,
    energy: &[f64],
    hbar: f64,
    tail_tol: f64,
) -> Result<ScarState> {
    let target = select_target(dec, energy, hbar)?;
    let psi = coherent(z0, hbar, tail_tol)?;
    let projected = average_project(dec, &psi, &target)?;
    let norm_sqr = projected.norm_sqr();
    let info = gram(dec, z0)?;
    let c_hbar = if info.rank == 0 {
        1.0
    } else {
        info.torus_volume * info.det.sqrt() * norm_sqr
            / (4.0 * std::f64::consts::PI * hbar).powf(info.rank as f64 / 2.0)
    };
    Ok(ScarState {
        state: projected.scaled(C64::new(1.0 / norm_sqr.sqrt(), 0.0)),
        target,
        z0: z0.clone(),
        c_hbar,
        rank_d0: info.rank,
        gram_det: info.det,
        projected_norm_sqr: norm_sqr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockstate::eigen_residual;
    use crate::freqarith::exact::q_int;
    use crate::freqarith::GeneratorBasis;
    use crate::phasespace::sigma_membership;

    fn sqrt2() -> HarmonicDecomposition {
        let spec = FrequencySpec::new(
            GeneratorBasis::unit_and_roots(&[2]),
            vec![vec![q_int(1), q_int(0)], vec![q_int(0), q_int(1)]],
        )
        .unwrap();
        decompose(&spec).unwrap()
    }

    #[test]
    fn gram_examples() {
        let dec = sqrt2();
        let z0 = sigma_membership(&dec, &[0.5, 0.5]).unwrap().z0();
        let g = gram(&dec, &z0).unwrap();
        assert_eq!(g.rank, 2);
        assert!((g.matrix[0][0] - 1.0).abs() < 1e-15 && g.matrix[0][1] == 0.0);
        assert!((g.matrix[1][1] - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.det - 2f64.sqrt()).abs() < 1e-15);

        let g = gram(&dec, &PhasePoint::new(vec![2f64.sqrt(), 0.0], vec![0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(g.rank, 1);
        assert!((g.det - 2.0).abs() < 1e-15);
        assert!((g.torus_volume - 2.0 * std::f64::consts::PI).abs() < 1e-15);

        assert_eq!(gram(&dec, &PhasePoint::origin(2)).unwrap().rank, 0);
    }

    #[test]
    fn scar_is_unit_joint_eigenvector() {
        let dec = sqrt2();
        let z0 = PhasePoint::new(vec![0.6, 0.0], vec![0.8, 1.0 / 2f64.sqrt().sqrt()]).unwrap();
        let scar = normalize_scar(&dec, &z0, &[0.5, 0.5], 0.02, 1e-14).unwrap();
        assert!((scar.state.norm() - 1.0).abs() < 1e-12);
        for n in 0..2 {
            let r = eigen_residual(&dec, &scar.state, n, scar.target.lambda[n]).unwrap();
            assert!(r < 1e-10, "{r}");
        }
        assert!((scar.c_hbar - 1.0).abs() < 0.1, "{}", scar.c_hbar);
    }
}
