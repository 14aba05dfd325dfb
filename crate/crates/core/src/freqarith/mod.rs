//! Exact arithmetic over the frequency vector.
//!
//! Irrational frequencies are declared, not detected: each `ω_j` is an exact
//! rational combination of named real generators that the caller asserts
//! to be linearly independent over Q. Generators themselves are stored as
//! exact decimal rationals with at least 30 significant digits, so every
//! numeric value derived here is an exact rational rounded once to `f64`.

pub mod conductor;
pub mod exact;
mod spec_file;

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub use conductor::conductor;
pub use exact::Q;

use crate::error::{Error, Result};
use exact::{dot, parse_decimal, q_int, sqrt_decimal, to_f64};

/// Minimum number of significant digits for a non-integer generator literal.
pub const MIN_GENERATOR_DIGITS: usize = 30;

/// Named real generators of the ambient field for the frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBasis {
    labels: Vec<String>,
    values: Vec<Q>,
    sources: Vec<String>,
}

impl GeneratorBasis {
    /// Builds a basis from `(label, literal)` pairs. A literal is an integer,
    /// a decimal with at least [`MIN_GENERATOR_DIGITS`] significant digits,
    /// or `sqrt(n)` for a nonnegative integer `n`.
    pub fn new<S: AsRef<str>, T: AsRef<str>>(entries: &[(S, T)]) -> Result<Self> {
        let mut basis = GeneratorBasis {
            labels: Vec::new(),
            values: Vec::new(),
            sources: Vec::new(),
        };
        for (label, literal) in entries {
            let value = parse_generator(literal.as_ref()).map_err(Error::Validation)?;
            basis.push(label.as_ref(), literal.as_ref(), value)?;
        }
        if basis.values.is_empty() {
            return Err(Error::Validation("at least one generator is required".into()));
        }
        Ok(basis)
    }

    /// The basis `{1, √p₁, √p₂, …}` for square-free integers `p_i`.
    pub fn unit_and_roots(roots: &[u32]) -> Self {
        let mut entries = vec![("one".to_string(), "1".to_string())];
        entries.extend(roots.iter().map(|p| (format!("sqrt{p}"), format!("sqrt({p})"))));
        Self::new(&entries).expect("square roots of positive integers are valid generators")
    }

    fn push(&mut self, label: &str, source: &str, value: Q) -> Result<()> {
        if label.is_empty() || !label.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(Error::Validation(format!("bad generator label `{label}`")));
        }
        if self.labels.iter().any(|l| l == label) {
            return Err(Error::Validation(format!("duplicate generator `{label}`")));
        }
        if !value.is_positive() {
            return Err(Error::Validation(format!("generator `{label}` must be > 0")));
        }
        self.labels.push(label.to_string());
        self.sources.push(source.trim().to_string());
        self.values.push(value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// Exact value (to generator precision) of a combination `Σ c_i g_i`.
    pub fn evaluate(&self, coords: &[Q]) -> Q {
        dot(coords, &self.values)
    }

    pub fn evaluate_f64(&self, coords: &[Q]) -> f64 {
        to_f64(&self.evaluate(coords))
    }
}

fn parse_generator(literal: &str) -> std::result::Result<Q, String> {
    let s = literal.trim();
    if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let n: BigInt = inner
            .trim()
            .parse()
            .map_err(|_| format!("bad sqrt argument `{inner}`"))?;
        return sqrt_decimal(&n);
    }
    let (value, significant) = parse_decimal(s)?;
    match significant {
        Some(digits) if digits < MIN_GENERATOR_DIGITS => Err(format!(
            "generator `{s}` has {digits} significant digits; at least {MIN_GENERATOR_DIGITS} are required"
        )),
        _ => Ok(value),
    }
}

/// The frequency vector `ω`, row `j` of `coords` giving `ω_j = Σ_i coords[j][i] g_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySpec {
    basis: GeneratorBasis,
    coords: Vec<Vec<Q>>,
    numeric: Vec<f64>,
}

impl FrequencySpec {
    pub fn new(basis: GeneratorBasis, coords: Vec<Vec<Q>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Validation("at least one frequency is required".into()));
        }
        let m = basis.len();
        let mut numeric = Vec::with_capacity(coords.len());
        for (j, row) in coords.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Validation(format!(
                    "omega_{} has {} coordinates, expected {m}",
                    j + 1,
                    row.len()
                )));
            }
            let exact = basis.evaluate(row);
            if !exact.is_positive() {
                return Err(Error::Validation(format!(
                    "omega_{} = {} is not positive",
                    j + 1,
                    to_f64(&exact)
                )));
            }
            numeric.push(to_f64(&exact));
        }
        Ok(FrequencySpec {
            basis,
            coords,
            numeric,
        })
    }

    /// Frequencies that are all rational (a single generator `1`).
    pub fn rational(omegas: &[Q]) -> Result<Self> {
        let basis = GeneratorBasis::new(&[("one", "1")])?;
        Self::new(basis, omegas.iter().map(|w| vec![w.clone()]).collect())
    }

    /// Cross-checks caller-supplied decimal values against the exact rows;
    /// they must agree to 20 significant digits.
    pub fn check_declared(&self, declared: &[Q]) -> Result<()> {
        if declared.len() != self.dim() {
            return Err(Error::Validation(format!(
                "{} numeric values declared for {} frequencies",
                declared.len(),
                self.dim()
            )));
        }
        let tolerance = exact::q_frac(1, 100_000_000_000_000_000) / q_int(1000);
        for (j, value) in declared.iter().enumerate() {
            let exact = self.exact_value(j);
            if ((value - &exact) / &exact).abs() > tolerance {
                return Err(Error::Validation(format!(
                    "numeric omega_{} = {} disagrees with its exact coordinates ({})",
                    j + 1,
                    to_f64(value),
                    to_f64(&exact)
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    pub fn coords(&self) -> &[Vec<Q>] {
        &self.coords
    }

    pub fn numeric(&self) -> &[f64] {
        &self.numeric
    }

    pub fn exact_value(&self, j: usize) -> Q {
        self.basis.evaluate(&self.coords[j])
    }

    /// Generator coordinates of `|ω|₁ = Σ ω_j`.
    pub fn l1_coords(&self) -> Vec<Q> {
        (0..self.basis.len())
            .map(|i| self.coords.iter().map(|row| &row[i]).sum())
            .collect()
    }

    /// Parses the plain-text frequency file format.
    pub fn parse(text: &str) -> Result<Self> {
        spec_file::parse(text)
    }

    pub fn to_text(&self) -> String {
        spec_file::render(self)
    }
}

/// Rank over Q of the frequencies and the first-pivot basis indices.
pub fn rational_span(spec: &FrequencySpec) -> (usize, Vec<usize>) {
    let pivots = exact::pivot_rows(spec.coords());
    (pivots.len(), pivots)
}

/// One periodic piece `ℋ_n = v_n Σ_j ν_{n,j} H_j` of the oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicComponent {
    pub index: usize,
    /// Index of the frequency used as `v_n`.
    pub pivot: usize,
    pub v_coords: Vec<Q>,
    pub v: f64,
    pub nu: Vec<Q>,
    /// `[ν_n]`, the smallest nonzero `|ν_{n,j}|`.
    pub nu_min: Q,
    /// Least `K` with `K [ν_n]⁻¹ ν_n` integral.
    pub big_k: u64,
    /// `k(n) = K_n [ν_n]⁻¹ ν_n`, a primitive integer vector.
    pub k: Vec<i64>,
    pub period: f64,
    /// `ν(n) = v_n Σ_j ν_{n,j}` in generator coordinates.
    pub nu_trace_coords: Vec<Q>,
    pub nu_trace: f64,
}

impl PeriodicComponent {
    /// Angular frequency of mode `j` under the flow of this component.
    pub fn mode_frequency(&self, j: usize) -> f64 {
        self.v * to_f64(&self.nu[j])
    }

    /// Spacing `2π/T_n` of the ladder `λ = ħ(2π r/T_n + ν(n)/2)`.
    pub fn rung_spacing(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// The integer rung `k·k(n)` of a number-basis index.
    pub fn rung(&self, k: &[u32]) -> i64 {
        self.k.iter().zip(k).map(|(&a, &b)| a * i64::from(b)).sum()
    }

    pub fn conductor(&self, sigma: i8) -> Result<u64> {
        conductor(&self.k, sigma)
    }

    /// Generator coordinates of `v_n·ν_n·k + ν(n)/2`, the component eigenvalue
    /// divided by `ħ`.
    pub fn level_coords(&self, k: &[u32]) -> Vec<Q> {
        let dotk: Q = self
            .nu
            .iter()
            .zip(k)
            .map(|(x, &kj)| x * q_int(i64::from(kj)))
            .sum();
        let half = exact::q_frac(1, 2);
        self.v_coords
            .iter()
            .zip(&self.nu_trace_coords)
            .map(|(v, t)| v * &dotk + t * &half)
            .collect()
    }

    fn from_parts(
        index: usize,
        pivot: usize,
        v_coords: Vec<Q>,
        nu: Vec<Q>,
        basis: &GeneratorBasis,
    ) -> Result<Self> {
        let v = basis.evaluate_f64(&v_coords);
        let (nu_min, big_k, k) = exact::primitive_direction(&nu)
            .ok_or_else(|| Error::Domain(format!("component {index} has ν = 0")))?;
        let big_k_u = big_k
            .to_u64()
            .ok_or_else(|| Error::Resource(format!("K = {big_k} does not fit in 64 bits")))?;
        let k = k
            .iter()
            .map(|x| {
                x.to_i64()
                    .ok_or_else(|| Error::Resource(format!("k(n) entry {x} does not fit in 64 bits")))
            })
            .collect::<Result<Vec<_>>>()?;
        let period = period_of(v, &nu)?;
        let trace: Q = nu.iter().sum();
        let nu_trace_coords: Vec<Q> = v_coords.iter().map(|c| c * &trace).collect();
        let nu_trace = basis.evaluate_f64(&nu_trace_coords);
        Ok(PeriodicComponent {
            index,
            pivot,
            v_coords,
            v,
            nu,
            nu_min,
            big_k: big_k_u,
            k,
            period,
            nu_trace_coords,
            nu_trace,
        })
    }
}

/// The splitting `H = Σ_n ℋ_n` of the oscillator into periodic pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDecomposition {
    spec: FrequencySpec,
    components: Vec<PeriodicComponent>,
}

impl HarmonicDecomposition {
    pub fn spec(&self) -> &FrequencySpec {
        &self.spec
    }

    pub fn components(&self) -> &[PeriodicComponent] {
        &self.components
    }

    pub fn component(&self, n: usize) -> &PeriodicComponent {
        &self.components[n]
    }

    pub fn d_omega(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn omega(&self) -> &[f64] {
        self.spec.numeric()
    }

    /// The `d_ω × d` matrix of the `ν_n`.
    pub fn nu_matrix(&self) -> Vec<Vec<Q>> {
        self.components.iter().map(|c| c.nu.clone()).collect()
    }

    /// `|ℛ_ω| = Π T_n`.
    pub fn torus_volume(&self) -> f64 {
        self.components.iter().map(|c| c.period).product()
    }

    /// Generator coordinates of `Σ_n v_n ν_{n,j}`; equals row `j` of the spec.
    pub fn reconstruct(&self, j: usize) -> Vec<Q> {
        let m = self.spec.basis().len();
        let mut acc = vec![Q::zero(); m];
        for c in &self.components {
            for (a, v) in acc.iter_mut().zip(&c.v_coords) {
                *a += v * &c.nu[j];
            }
        }
        acc
    }
}

/// Splits `ω = Σ_n v_n ν_n` using the pivot frequencies as the basis `v_n`.
pub fn decompose(spec: &FrequencySpec) -> Result<HarmonicDecomposition> {
    let (_, pivots) = rational_span(spec);
    let basis_rows: Vec<Vec<Q>> = pivots.iter().map(|&p| spec.coords()[p].clone()).collect();
    let d = spec.dim();
    let mut nu = vec![vec![Q::zero(); d]; pivots.len()];
    for (j, row) in spec.coords().iter().enumerate() {
        let c = exact::solve_in_span(&basis_rows, row).ok_or_else(|| {
            Error::Consistency(format!("omega_{} is outside the span of the pivots", j + 1))
        })?;
        for (n, value) in c.into_iter().enumerate() {
            nu[n][j] = value;
        }
    }
    let components = pivots
        .iter()
        .zip(nu)
        .enumerate()
        .map(|(n, (&p, nu_n))| {
            PeriodicComponent::from_parts(n, p, spec.coords()[p].clone(), nu_n, spec.basis())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HarmonicDecomposition {
        spec: spec.clone(),
        components,
    })
}

/// Period `T = 2πK/(|v|[ν])` of the flow with frequency vector `v·ν`.
pub fn period_of(v: f64, nu: &[Q]) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::Domain(format!("period of a flow with speed {v}")));
    }
    let (nu_min, big_k, _) = exact::primitive_direction(nu)
        .ok_or_else(|| Error::Domain("period of the zero vector".into()))?;
    let big_k = big_k
        .to_f64()
        .ok_or_else(|| Error::Resource("K overflows f64".into()))?;
    Ok(2.0 * PI * big_k / (v.abs() * to_f64(&nu_min)))
}

/// Ascending `√eig(Q)` for a symmetric positive-definite matrix. This is a
/// numeric helper only; exact structure must be declared in a
/// [`FrequencySpec`].
pub fn numeric_frequencies(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = q.len();
    if d == 0 || q.iter().any(|row| row.len() != d) {
        return Err(Error::Domain("Q must be a nonempty square matrix".into()));
    }
    let scale = q.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (q[i][j] - q[j][i]).abs() > 1e-12 * scale {
                return Err(Error::Domain("Q is not symmetric".into()));
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (q[i][j] + q[j][i]));
    let eig = m.symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    if let Some(&bad) = values.iter().find(|&&e| e <= 0.0) {
        return Err(Error::Domain(format!(
            "Q is not positive definite (eigenvalue {bad})"
        )));
    }
    Ok(values.into_iter().map(f64::sqrt).collect())
}

impl fmt::Display for HarmonicDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}, d_omega = {}", self.dim(), self.d_omega())?;
        for c in &self.components {
            let nu: Vec<String> = c.nu.iter().map(exact::format_rational).collect();
            let conductor = match c.conductor(1) {
                Ok(n) => n.to_string(),
                Err(_) => "-".into(),
            };
            writeln!(
                f,
                "n={} pivot=omega_{} v={:.12} nu=({}) T={:.12} k=({}) K={} nu_trace={:.12} conductor={}",
                c.index + 1,
                c.pivot + 1,
                c.v,
                nu.join(", "),
                c.period,
                c.k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
                c.big_k,
                c.nu_trace,
                conductor
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use exact::q_frac;

    fn sqrt2_spec() -> FrequencySpec {
        let basis = GeneratorBasis::unit_and_roots(&[2]);
        FrequencySpec::new(
            basis,
            vec![vec![q_int(1), q_int(0)], vec![q_int(0), q_int(1)]],
        )
        .unwrap()
    }

    #[test]
    fn span_examples() {
        let equal = FrequencySpec::rational(&[q_int(1), q_int(1)]).unwrap();
        assert_eq!(rational_span(&equal), (1, vec![0]));
        assert_eq!(rational_span(&sqrt2_spec()).0, 2);
        let two_three = FrequencySpec::rational(&[q_int(2), q_int(3)]).unwrap();
        assert_eq!(rational_span(&two_three), (1, vec![0]));
    }

    #[test]
    fn decompose_sqrt2() {
        let dec = decompose(&sqrt2_spec()).unwrap();
        assert_eq!(dec.d_omega(), 2);
        let c = dec.components();
        assert!((c[0].v - 1.0).abs() < 1e-15);
        assert!((c[1].v - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c[0].nu, vec![q_int(1), q_int(0)]);
        assert_eq!(c[1].nu, vec![q_int(0), q_int(1)]);
        assert!((c[0].nu_trace - 1.0).abs() < 1e-15);
        assert!((c[1].nu_trace - 2f64.sqrt()).abs() < 1e-15);
        assert!((c[0].period - 2.0 * PI).abs() < 1e-14);
        assert!((c[1].period - 2.0 * PI / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn decompose_two_three() {
        let spec = FrequencySpec::rational(&[q_int(2), q_int(3)]).unwrap();
        let dec = decompose(&spec).unwrap();
        let c = &dec.components()[0];
        assert!((c.v - 2.0).abs() < 1e-15);
        assert_eq!(c.nu, vec![q_int(1), q_frac(3, 2)]);
        assert_eq!(c.k, vec![2, 3]);
        assert_eq!(c.big_k, 2);
        assert_eq!(c.conductor(1).unwrap(), 2);
        assert!((c.period - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn period_examples() {
        assert!((period_of(1.0, &[q_int(1), q_int(0)]).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((period_of(2.0, &[q_int(1), q_frac(3, 2)]).unwrap() - 2.0 * PI).abs() < 1e-14);
        let t = period_of(2f64.sqrt(), &[q_int(0), q_int(1)]).unwrap();
        assert!((t - 4.442882938158366).abs() < 1e-12);
        assert!(matches!(period_of(1.0, &[q_int(0)]), Err(Error::Domain(_))));
    }

    #[test]
    fn numeric_frequency_examples() {
        let id = numeric_frequencies(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id, vec![1.0, 1.0]);
        let diag = numeric_frequencies(&[vec![4.0, 0.0], vec![0.0, 9.0]]).unwrap();
        assert!((diag[0] - 2.0).abs() < 1e-14 && (diag[1] - 3.0).abs() < 1e-14);
        let coupled = numeric_frequencies(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((coupled[0] - 1.0).abs() < 1e-14);
        assert!((coupled[1] - 3f64.sqrt()).abs() < 1e-14);
        assert!(numeric_frequencies(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(numeric_frequencies(&[vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn validation() {
        assert!(GeneratorBasis::new(&[("g", "1.414")]).is_err());
        assert!(GeneratorBasis::new(&[("g", "-1")]).is_err());
        assert!(GeneratorBasis::new(&[("a", "1"), ("a", "sqrt(2)")]).is_err());
        let basis = GeneratorBasis::unit_and_roots(&[2]);
        // 1 − √2 < 0
        let negative = FrequencySpec::new(basis.clone(), vec![vec![q_int(1), q_int(-1)]]);
        assert!(matches!(negative, Err(Error::Validation(_))));
        let ok = FrequencySpec::new(basis, vec![vec![q_int(-1), q_int(1)]]).unwrap();
        let good = exact::parse_rational("0.41421356237309504880168872420969807856967").unwrap();
        assert!(ok.check_declared(&[good]).is_ok());
        let bad = exact::parse_rational("0.414213562373095048").unwrap();
        assert!(ok.check_declared(&[bad]).is_err());
    }
}
