//! Weyl-quantized observables acting on number-basis states.
//!
//! `Op_ħ(x_j) = √(ħ/2)(a_j + a_j†)` and `Op_ħ(ξ_j) = i√(ħ/2)(a_j† − a_j)`;
//! a monomial `x^a ξ^b` in one mode is quantized as the symmetrized word
//! `2^{−a} Σ_k C(a,k) X^k P^b X^{a−k}`. Characters `e^{iσ(z,w)}` quantize to
//! displacement operators `D(β)` with `β_j = −√(ħ/2)(w_{x,j} + i w_{ξ,j})`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{check_hbar, inner, Coefficients, FockState};
use crate::error::Result;
use crate::freqarith::HarmonicDecomposition;
use crate::phasespace::{Character, Monomial, Polynomial, Symbol};
use crate::spectral::FockIndex;
use crate::C64;

/// Amplitudes for indices `lo, lo+1, …` of one mode.
#[derive(Debug, Clone)]
struct Fiber {
    lo: u32,
    v: Vec<C64>,
}

impl Fiber {
    fn shifted(&self, s: f64, creation: C64, annihilation: C64) -> Fiber {
        let lo = self.lo.saturating_sub(1);
        let mut out = vec![C64::new(0.0, 0.0); self.v.len() + 2];
        for (i, c) in self.v.iter().enumerate() {
            let m = self.lo + i as u32;
            if m > 0 {
                out[(m - 1 - lo) as usize] += c * annihilation * (s * f64::from(m).sqrt());
            }
            out[(m + 1 - lo) as usize] += c * creation * (s * f64::from(m + 1).sqrt());
        }
        while out.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) && out.len() > 1 {
            out.pop();
        }
        Fiber { lo, v: out }
    }

    fn x(&self, s: f64) -> Fiber {
        self.shifted(s, C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    fn p(&self, s: f64) -> Fiber {
        self.shifted(s, C64::new(0.0, 1.0), C64::new(0.0, -1.0))
    }

    fn add_scaled(&mut self, w: f64, other: &Fiber) {
        let lo = self.lo.min(other.lo);
        let hi = (self.lo as usize + self.v.len()).max(other.lo as usize + other.v.len());
        let mut out = vec![C64::new(0.0, 0.0); hi - lo as usize];
        for (i, c) in self.v.iter().enumerate() {
            out[self.lo as usize - lo as usize + i] += c;
        }
        for (i, c) in other.v.iter().enumerate() {
            out[other.lo as usize - lo as usize + i] += c * w;
        }
        *self = Fiber { lo, v: out };
    }

    /// The Weyl quantization of `x^a ξ^b` applied to this fiber.
    fn weyl(&self, a: u32, b: u32, s: f64) -> Fiber {
        let mut acc = Fiber {
            lo: self.lo,
            v: vec![C64::new(0.0, 0.0)],
        };
        let mut right = self.clone();
        let scale = 0.5f64.powi(a as i32);
        let mut binom = 1.0;
        // right = X^{a−k} f runs k from a down to 0.
        let mut powers = Vec::with_capacity(a as usize + 1);
        for _ in 0..=a {
            powers.push(right.clone());
            right = right.x(s);
        }
        for k in 0..=a {
            let mut t = powers[(a - k) as usize].clone();
            for _ in 0..b {
                t = t.p(s);
            }
            for _ in 0..k {
                t = t.x(s);
            }
            acc.add_scaled(scale * binom, &t);
            binom = binom * f64::from(a - k) / f64::from(k + 1);
        }
        acc
    }
}

fn rescale(hbar: f64) -> f64 {
    (hbar / 2.0).sqrt()
}

/// Applies a single-mode operator to every fiber of a sparse map along mode `j`.
fn map_along<F>(map: &BTreeMap<FockIndex, C64>, j: usize, f: F) -> BTreeMap<FockIndex, C64>
where
    F: Fn(&Fiber) -> Fiber,
{
    let mut fibers: BTreeMap<Vec<u32>, Vec<(u32, C64)>> = BTreeMap::new();
    for (k, c) in map {
        let mut rest = k.0.clone();
        rest[j] = 0;
        fibers.entry(rest).or_default().push((k.0[j], *c));
    }
    let mut out = BTreeMap::new();
    for (rest, entries) in fibers {
        let lo = entries.iter().map(|e| e.0).min().expect("nonempty fiber");
        let hi = entries.iter().map(|e| e.0).max().expect("nonempty fiber");
        let mut v = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (m, c) in entries {
            v[(m - lo) as usize] = c;
        }
        let image = f(&Fiber { lo, v });
        for (i, c) in image.v.into_iter().enumerate() {
            if c != C64::new(0.0, 0.0) {
                let mut k = rest.clone();
                k[j] = image.lo + i as u32;
                out.insert(FockIndex(k), c);
            }
        }
    }
    out
}

fn apply_monomial(m: &Monomial, state: &FockState) -> Result<FockState> {
    let d = state.dim();
    let s = rescale(state.hbar);
    match &state.coeffs {
        Coefficients::Product(modes) => {
            let modes = modes
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let f = Fiber { lo: 0, v: v.clone() };
                    let g = if m[j] + m[d + j] == 0 { f } else { f.weyl(m[j], m[d + j], s) };
                    let mut out = vec![C64::new(0.0, 0.0); g.lo as usize];
                    out.extend(g.v);
                    out
                })
                .collect();
            Ok(FockState::from_product(state.hbar, modes, state.tail))
        }
        Coefficients::Sparse(map) => {
            let mut cur = map.clone();
            for j in 0..d {
                let (a, b) = (m[j], m[d + j]);
                if a + b > 0 {
                    cur = map_along(&cur, j, |f| f.weyl(a, b, s));
                }
            }
            Ok(FockState::from_sparse(d, state.hbar, cur, state.tail))
        }
    }
}

/// `Op_ħ(p) ψ` as a sparse state.
pub fn apply_polynomial(p: &Polynomial, state: &FockState) -> Result<FockState> {
    let mut out = BTreeMap::new();
    for (m, coef) in p.terms() {
        let image = apply_monomial(m, state)?;
        for (k, c) in image.entries()? {
            *out.entry(k).or_insert(C64::new(0.0, 0.0)) += coef * c;
        }
    }
    Ok(FockState::from_sparse(state.dim(), state.hbar, out, state.tail))
}

/// `Op_ħ(ℋ_n) = Σ_j v_n ν_{n,j} Op_ħ(H_j)` as a symbol.
pub fn component_operator(dec: &HarmonicDecomposition, n: usize) -> Polynomial {
    let d = dec.dim();
    let c = dec.component(n);
    (0..d).fold(Polynomial::zero(d), |acc, j| {
        acc.add(&Polynomial::mode_energy(d, j).scale(C64::new(c.mode_frequency(j), 0.0)))
    })
}

/// `‖Op_ħ(ℋ_n)ψ − λψ‖₂`, computed with the ladder algebra.
pub fn eigen_residual(dec: &HarmonicDecomposition, state: &FockState, n: usize, lambda: f64) -> Result<f64> {
    let image = apply_polynomial(&component_operator(dec, n), state)?;
    Ok(image.axpy(C64::new(-lambda, 0.0), state)?.norm())
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// `⟨m|D(β)|n⟩` for `m < rows`, `n < cols`, indexed `[m][n]`.
///
/// For `m = n + s ≥ n` the entry is `g_n e^{is·arg β}` where
/// `g_n = √(n!/(n+s)!) |β|^s e^{−|β|²/2} L_n^{(s)}(|β|²)` obeys the
/// normalized three-term recurrence; `m < n` follows from
/// `⟨m|D(β)|n⟩ = conj⟨n|D(−β)|m⟩`.
pub fn displacement_matrix(beta: C64, rows: usize, cols: usize) -> Vec<Vec<C64>> {
    let mut out = vec![vec![C64::new(0.0, 0.0); cols]; rows];
    let x = beta.norm_sqr();
    if x == 0.0 {
        for (i, row) in out.iter_mut().enumerate().take(cols) {
            row[i] = C64::new(1.0, 0.0);
        }
        return out;
    }
    let lnf = ln_factorials(rows.max(cols));
    let ln_abs = beta.norm().ln();
    let arg = beta.arg();
    let arg_neg = (-beta).arg();
    let span = rows.max(cols);
    for s in 0..span {
        // Fill m = n + s (below the diagonal) and m = n − s (above it).
        let len_lower = cols.min(rows.saturating_sub(s));
        let len_upper = rows.min(cols.saturating_sub(s));
        let len = len_lower.max(len_upper);
        if len == 0 {
            continue;
        }
        let g = laguerre_column(x, s, len, ln_abs, &lnf);
        let lower = Complex64::from_polar(1.0, s as f64 * arg);
        let upper = Complex64::from_polar(1.0, -(s as f64) * arg_neg);
        for (n, &gn) in g.iter().enumerate() {
            if n < len_lower {
                out[n + s][n] = lower * gn;
            }
            if s > 0 && n < len_upper {
                out[n][n + s] = upper * gn;
            }
        }
    }
    out
}

/// `g_0, …, g_{len−1}` for order `s`.
fn laguerre_column(x: f64, s: usize, len: usize, ln_abs: f64, lnf: &[f64]) -> Vec<f64> {
    const BIG: f64 = 1e150;
    let sf = s as f64;
    let mut scale = -x / 2.0 + sf * ln_abs - 0.5 * lnf[s];
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut out = Vec::with_capacity(len);
    out.push((scale).exp());
    for n in 0..len.saturating_sub(1) {
        let nf = n as f64;
        let next = ((2.0 * nf + sf + 1.0 - x) * cur - (nf * (nf + sf)).sqrt() * prev)
            / ((nf + 1.0) * (nf + 1.0 + sf)).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            scale += BIG.ln();
        }
        out.push(cur * scale.exp());
    }
    out
}

fn betas(ch: &Character, hbar: f64) -> Vec<C64> {
    let s = rescale(hbar);
    (0..ch.dim())
        .map(|j| C64::new(-s * ch.w_x[j], -s * ch.w_xi[j]))
        .collect()
}

/// `Op_ħ(e^{iσ(z,w)}) ψ`, keeping output indices `k_j ≤ rows[j]`.
pub fn apply_character(ch: &Character, state: &FockState, rows: &[u32]) -> Result<FockState> {
    let b = betas(ch, state.hbar);
    match &state.coeffs {
        Coefficients::Product(modes) => {
            let modes = modes
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let dm = displacement_matrix(b[j], rows[j] as usize + 1, v.len());
                    dm.iter().map(|row| row.iter().zip(v).map(|(a, c)| a * c).sum()).collect()
                })
                .collect();
            Ok(FockState::from_product(state.hbar, modes, state.tail))
        }
        Coefficients::Sparse(map) => {
            let mut cur = map.clone();
            for (j, beta) in b.iter().enumerate() {
                let cols = cur.keys().map(|k| k.0[j]).max().unwrap_or(0) as usize + 1;
                let dm = displacement_matrix(*beta, rows[j] as usize + 1, cols);
                cur = map_along(&cur, j, |f| {
                    let mut v = vec![C64::new(0.0, 0.0); rows[j] as usize + 1];
                    for (i, c) in f.v.iter().enumerate() {
                        let n = f.lo as usize + i;
                        for (m, out) in v.iter_mut().enumerate() {
                            *out += dm[m][n] * c;
                        }
                    }
                    Fiber { lo: 0, v }
                });
            }
            Ok(FockState::from_sparse(state.dim(), state.hbar, cur, state.tail))
        }
    }
}

fn character_element(bra: &FockState, ket: &FockState, ch: &Character) -> Result<C64> {
    let b = betas(ch, ket.hbar);
    match (&bra.coeffs, &ket.coeffs) {
        (_, Coefficients::Product(_)) => {
            let image = apply_character(ch, ket, bra.cutoff())?;
            inner(bra, &image)
        }
        (Coefficients::Product(modes), Coefficients::Sparse(map)) => {
            // u_j[n] = Σ_m conj(a_j[m]) ⟨m|D_j|n⟩.
            let u: Vec<Vec<C64>> = modes
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    let dm = displacement_matrix(b[j], a.len(), ket.cutoff()[j] as usize + 1);
                    (0..=ket.cutoff()[j] as usize)
                        .map(|n| a.iter().enumerate().map(|(m, am)| am.conj() * dm[m][n]).sum())
                        .collect()
                })
                .collect();
            Ok(map
                .iter()
                .map(|(k, c)| c * k.0.iter().enumerate().map(|(j, &kj)| u[j][kj as usize]).product::<C64>())
                .sum())
        }
        (Coefficients::Sparse(bmap), Coefficients::Sparse(kmap)) => {
            let dms: Vec<Vec<Vec<C64>>> = (0..ket.dim())
                .map(|j| {
                    displacement_matrix(
                        b[j],
                        bra.cutoff()[j] as usize + 1,
                        ket.cutoff()[j] as usize + 1,
                    )
                })
                .collect();
            let mut total = C64::new(0.0, 0.0);
            for (kb, cb) in bmap {
                for (kk, ck) in kmap {
                    let mut e = cb.conj() * ck;
                    for (j, dm) in dms.iter().enumerate() {
                        e *= dm[kb.0[j] as usize][kk.0[j] as usize];
                    }
                    total += e;
                }
            }
            Ok(total)
        }
    }
}

/// `⟨bra, Op_ħ(a) ket⟩`.
pub fn expectation(bra: &FockState, ket: &FockState, a: &Symbol) -> Result<C64> {
    check_hbar(bra, ket)?;
    match a {
        Symbol::Polynomial(p) => {
            let mut total = C64::new(0.0, 0.0);
            for (m, coef) in p.terms() {
                total += coef * inner(bra, &apply_monomial(m, ket)?)?;
            }
            Ok(total)
        }
        Symbol::Character(ch) => character_element(bra, ket, ch),
        Symbol::Sum(parts) => parts
            .iter()
            .map(|(w, s)| Ok(w * expectation(bra, ket, s)?))
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockstate::coherent;
    use crate::phasespace::PhasePoint;

    #[test]
    fn ground_character_is_gaussian() {
        let hbar = 0.07;
        let g = FockState::ground(2, hbar);
        let w = ([0.8, -1.5], [2.0, 0.3]);
        let a = Symbol::character(w.0.to_vec(), w.1.to_vec()).unwrap();
        let got = expectation(&g, &g, &a).unwrap();
        let w2: f64 = w.0.iter().chain(&w.1).map(|v| v * v).sum();
        assert!((got - C64::new((-hbar * w2 / 4.0).exp(), 0.0)).norm() < 1e-15);
        let sparse = FockState::basis(FockIndex::zero(2), hbar);
        let got2 = expectation(&sparse, &sparse, &a).unwrap();
        assert!((got - got2).norm() < 1e-15);
    }

    #[test]
    fn ground_energy() {
        let g = FockState::ground(3, 0.3);
        for j in 0..3 {
            let e = expectation(&g, &g, &Symbol::mode_energy(3, j)).unwrap();
            assert!((e.re - 0.15).abs() < 1e-15 && e.im.abs() < 1e-15);
        }
    }

    #[test]
    fn displacement_is_unitary() {
        let beta = C64::new(2.3, -1.1);
        let n = 80;
        let dm = displacement_matrix(beta, 220, n);
        for a in 0..n {
            for b in 0..n {
                let dot: C64 = (0..220).map(|m| dm[m][a].conj() * dm[m][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-12, "{a} {b} {dot}");
            }
        }
    }

    #[test]
    fn displacement_of_coherent_state() {
        // D(β)|α⟩ = e^{i Im(β ᾱ)} |α + β⟩.
        let hbar = 0.02;
        let z = PhasePoint::new(vec![0.5], vec![-0.3]).unwrap();
        let psi = coherent(&z, hbar, 1e-30).unwrap();
        let ch = Character::new(vec![1.7], vec![-0.9]).unwrap();
        let beta = betas(&ch, hbar)[0];
        let alpha = C64::new(0.5, -0.3) / (2.0 * hbar).sqrt();
        let shifted_alpha = alpha + beta;
        let s = (2.0 * hbar).sqrt();
        let z2 = PhasePoint::new(vec![shifted_alpha.re * s], vec![shifted_alpha.im * s]).unwrap();
        let target = coherent(&z2, hbar, 1e-30).unwrap();
        let rows = target.cutoff()[0].max(psi.cutoff()[0]) + 40;
        let image = apply_character(&ch, &psi, &[rows]).unwrap();
        let phase = Complex64::from_polar(1.0, (beta * alpha.conj()).im);
        for m in 0..=target.cutoff()[0] {
            let diff = image.get(&[m]) - phase * target.get(&[m]);
            assert!(diff.norm() < 1e-12, "m = {m}: {diff}");
        }
    }

    #[test]
    fn large_argument_stays_finite() {
        let dm = displacement_matrix(C64::new(30.0, 5.0), 3200, 400);
        let col: f64 = (0..3200).map(|m| dm[m][399].norm_sqr()).sum();
        assert!((col - 1.0).abs() < 1e-9, "{col}");
    }

    #[test]
    fn polynomial_matches_ladder_algebra() {
        // ⟨n|Op(x²)|n⟩ = ħ(n + 1/2), ⟨n|Op(x ξ)|n⟩ = 0.
        let hbar = 0.4;
        for n in 0..6u32 {
            let s = FockState::basis(FockIndex(vec![n]), hbar);
            let x2 = expectation(&s, &s, &Symbol::parse("x1^2", 1).unwrap()).unwrap();
            assert!((x2.re - hbar * (f64::from(n) + 0.5)).abs() < 1e-14);
            let xxi = expectation(&s, &s, &Symbol::parse("x1*xi1", 1).unwrap()).unwrap();
            assert!(xxi.norm() < 1e-14);
            // ⟨x⁴⟩ = (ħ/2)² (6n² + 6n + 3).
            let x4 = expectation(&s, &s, &Symbol::parse("x1^4", 1).unwrap()).unwrap();
            let nf = f64::from(n);
            assert!((x4.re - (hbar / 2.0).powi(2) * (6.0 * nf * nf + 6.0 * nf + 3.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn weyl_symmetrization() {
        // Op(xξ) = (XP + PX)/2, so on a coherent state ⟨Op(xξ)⟩ = x ξ exactly.
        let hbar = 0.1;
        let z = PhasePoint::new(vec![0.8], vec![-0.6]).unwrap();
        let psi = coherent(&z, hbar, 1e-15).unwrap();
        let got = expectation(&psi, &psi, &Symbol::parse("x1*xi1", 1).unwrap()).unwrap();
        assert!((got - C64::new(-0.48, 0.0)).norm() < 1e-12, "{got}");
        let sparse = FockState::from_sparse(1, hbar, psi.entries().unwrap(), 0.0);
        let got2 = expectation(&sparse, &sparse, &Symbol::parse("x1*xi1", 1).unwrap()).unwrap();
        assert!((got - got2).norm() < 1e-12);
    }
}
