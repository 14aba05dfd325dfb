//! Lattice points `k ∈ Z₊^d` with prescribed rungs `k·k(n) = r_n` for every
//! periodic component: the joint eigenspaces of the `Op_ħ(ℋ_n)`.

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::FockIndex;
use crate::error::{Error, Result};
use crate::freqarith::exact::{self, q_int, Q};
use crate::freqarith::HarmonicDecomposition;

/// Default cap on visited backtracking nodes.
pub const NODE_BUDGET: u64 = 10_000_000;

/// Solver for `A k = r` where row `n` of `A` is `k(n)`. Columns are split
/// into `d_ω` pivots, solved through an integer adjugate, and free columns
/// that are enumerated.
#[derive(Debug, Clone)]
pub struct JointLattice {
    rows: Vec<Vec<i64>>,
    pivot_cols: Vec<usize>,
    free_cols: Vec<usize>,
    /// `denom·B⁻¹` for the pivot block `B`, with `denom` the common denominator.
    adjugate: Vec<Vec<i128>>,
    denom: i128,
}

impl JointLattice {
    pub fn new(dec: &HarmonicDecomposition) -> Result<Self> {
        let rows: Vec<Vec<i64>> = dec.components().iter().map(|c| c.k.clone()).collect();
        let d = dec.dim();
        let columns: Vec<Vec<Q>> = (0..d)
            .map(|j| rows.iter().map(|r| q_int(r[j])).collect())
            .collect();
        let pivot_cols = exact::pivot_rows(&columns);
        if pivot_cols.len() != rows.len() {
            return Err(Error::Consistency("the k(n) are linearly dependent".into()));
        }
        let free_cols = (0..d).filter(|j| !pivot_cols.contains(j)).collect();
        let basis: Vec<Vec<Q>> = pivot_cols.iter().map(|&j| columns[j].clone()).collect();
        let size = rows.len();
        // Column i of B⁻¹ solves B x = e_i; B's columns are `basis`.
        let mut inverse = vec![vec![Q::zero(); size]; size];
        for i in 0..size {
            let mut e = vec![Q::zero(); size];
            e[i] = q_int(1);
            let x = exact::solve_in_span(&basis, &e)
                .ok_or_else(|| Error::Consistency("singular pivot block".into()))?;
            for (r, value) in x.into_iter().enumerate() {
                inverse[r][i] = value;
            }
        }
        let denom_big = inverse
            .iter()
            .flatten()
            .fold(num_bigint::BigInt::from(1), |acc, q| acc.lcm(q.denom()));
        let denom = denom_big
            .to_i128()
            .ok_or_else(|| Error::Resource("pivot block denominator overflow".into()))?;
        let adjugate = inverse
            .iter()
            .map(|row| {
                row.iter()
                    .map(|q| {
                        (q * Q::from_integer(denom_big.clone()))
                            .to_integer()
                            .to_i128()
                            .ok_or_else(|| Error::Resource("adjugate overflow".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointLattice {
            rows,
            pivot_cols,
            free_cols,
            adjugate,
            denom,
        })
    }

    fn solve_pivots(&self, rungs: &[i64], k: &mut [u32], upper: &[u32]) -> bool {
        let rhs: Vec<i128> = self
            .rows
            .iter()
            .zip(rungs)
            .map(|(row, &r)| {
                let free: i128 = self
                    .free_cols
                    .iter()
                    .map(|&j| i128::from(row[j]) * i128::from(k[j]))
                    .sum();
                i128::from(r) - free
            })
            .collect();
        for (i, &col) in self.pivot_cols.iter().enumerate() {
            let num: i128 = self.adjugate[i].iter().zip(&rhs).map(|(a, b)| a * b).sum();
            if num % self.denom != 0 {
                return false;
            }
            let value = num / self.denom;
            if value < 0 || value > i128::from(upper[col]) {
                return false;
            }
            k[col] = value as u32;
        }
        true
    }

    /// All `k` with the given rungs and `k_j ≤ upper[j]`, in lexicographic
    /// order. `weights` (the frequencies) prune the free coordinates through
    /// `Σ_free ω_j k_j ≤ max_weight`. Stops after `limit` points.
    pub fn enumerate(
        &self,
        rungs: &[i64],
        upper: &[u32],
        weights: &[f64],
        max_weight: f64,
        limit: usize,
    ) -> Result<Vec<FockIndex>> {
        let mut out = Vec::new();
        let mut k = vec![0u32; upper.len()];
        let mut nodes = 0u64;
        self.descend(0, 0.0, rungs, upper, weights, max_weight, limit, &mut k, &mut out, &mut nodes)?;
        out.sort();
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        depth: usize,
        weight: f64,
        rungs: &[i64],
        upper: &[u32],
        weights: &[f64],
        max_weight: f64,
        limit: usize,
        k: &mut Vec<u32>,
        out: &mut Vec<FockIndex>,
        nodes: &mut u64,
    ) -> Result<()> {
        if out.len() >= limit {
            return Ok(());
        }
        *nodes += 1;
        if *nodes > NODE_BUDGET {
            return Err(Error::Resource(format!(
                "joint eigenspace search visited more than {NODE_BUDGET} nodes"
            )));
        }
        let Some(&col) = self.free_cols.get(depth) else {
            let mut candidate = k.clone();
            if self.solve_pivots(rungs, &mut candidate, upper) {
                out.push(FockIndex(candidate));
            }
            return Ok(());
        };
        let mut value = 0u32;
        loop {
            let w = weight + weights[col] * f64::from(value);
            if value > upper[col] || w > max_weight {
                break;
            }
            k[col] = value;
            self.descend(depth + 1, w, rungs, upper, weights, max_weight, limit, k, out, nodes)?;
            value += 1;
        }
        k[col] = 0;
        Ok(())
    }
}
