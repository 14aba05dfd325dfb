//! Observables on phase space: polynomials in `(x, ξ)` and Weyl–Heisenberg
//! characters `e^{iσ(z,w)}` with `σ(z,w) = ξ·w_x − x·w_ξ`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::PhasePoint;
use crate::error::{Error, Result};
use crate::C64;

/// Highest total degree accepted for polynomial symbols.
pub const MAX_DEGREE: u32 = 8;

/// Exponents `(a_1..a_d, b_1..b_d)` of `Π x_j^{a_j} ξ_j^{b_j}`.
pub type Monomial = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut p = Polynomial::zero(dim);
        p.add_term(vec![0; 2 * dim], c);
        p
    }

    /// `x_j` (0-based mode).
    pub fn x(dim: usize, j: usize) -> Self {
        let mut m = vec![0; 2 * dim];
        m[j] = 1;
        let mut p = Polynomial::zero(dim);
        p.add_term(m, C64::new(1.0, 0.0));
        p
    }

    /// `ξ_j` (0-based mode).
    pub fn xi(dim: usize, j: usize) -> Self {
        let mut m = vec![0; 2 * dim];
        m[dim + j] = 1;
        let mut p = Polynomial::zero(dim);
        p.add_term(m, C64::new(1.0, 0.0));
        p
    }

    /// `H_j = (x_j² + ξ_j²)/2`.
    pub fn mode_energy(dim: usize, j: usize) -> Self {
        let x = Polynomial::x(dim, j);
        let xi = Polynomial::xi(dim, j);
        x.mul(&x).add(&xi.mul(&xi)).scale(C64::new(0.5, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, C64> {
        &self.terms
    }

    pub fn add_term(&mut self, m: Monomial, c: C64) {
        assert_eq!(m.len(), 2 * self.dim, "monomial length");
        let entry = self.terms.entry(m).or_insert(C64::new(0.0, 0.0));
        *entry += c;
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.dim, C64::new(1.0, 0.0));
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, z: &PhasePoint) -> C64 {
        let d = self.dim;
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = 1.0;
                for j in 0..d {
                    v *= z.x[j].powi(m[j] as i32) * z.xi[j].powi(m[d + j] as i32);
                }
                c * v
            })
            .sum()
    }

    /// `p ∘ R_θ`, where `R_θ` rotates mode `j` as `z_j ↦ e^{−iθ_j} z_j`.
    pub fn rotate(&self, theta: &[f64]) -> Polynomial {
        let d = self.dim;
        let images: Vec<(Polynomial, Polynomial)> = (0..d)
            .map(|j| {
                let (s, c) = theta[j].sin_cos();
                let x = Polynomial::x(d, j);
                let xi = Polynomial::xi(d, j);
                (
                    x.scale(C64::new(c, 0.0)).add(&xi.scale(C64::new(s, 0.0))),
                    x.scale(C64::new(-s, 0.0)).add(&xi.scale(C64::new(c, 0.0))),
                )
            })
            .collect();
        let mut out = Polynomial::zero(d);
        for (m, coef) in &self.terms {
            let mut term = Polynomial::constant(d, *coef);
            for j in 0..d {
                if m[j] > 0 {
                    term = term.mul(&images[j].0.pow(m[j]));
                }
                if m[d + j] > 0 {
                    term = term.mul(&images[j].1.pow(m[d + j]));
                }
            }
            out = out.add(&term);
        }
        out.prune(0.0);
        out
    }

    fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() > tol);
    }
}

/// `e^{iσ(z,w)} = e^{i(ξ·w_x − x·w_ξ)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub w_x: Vec<f64>,
    pub w_xi: Vec<f64>,
}

impl Character {
    pub fn new(w_x: Vec<f64>, w_xi: Vec<f64>) -> Result<Self> {
        if w_x.len() != w_xi.len() {
            return Err(Error::Validation("character halves differ in length".into()));
        }
        if w_x.iter().chain(&w_xi).any(|v| !v.is_finite()) {
            return Err(Error::Validation("character parameter is not finite".into()));
        }
        Ok(Character { w_x, w_xi })
    }

    pub fn dim(&self) -> usize {
        self.w_x.len()
    }

    pub fn eval(&self, z: &PhasePoint) -> C64 {
        let phase: f64 = (0..self.dim())
            .map(|j| z.xi[j] * self.w_x[j] - z.x[j] * self.w_xi[j])
            .sum();
        Complex64::from_polar(1.0, phase)
    }

    /// `|w|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.w_x.iter().chain(&self.w_xi).map(|v| v * v).sum()
    }

    /// `e^{iσ(R_θ z, w)} = e^{iσ(z, R_{−θ} w)}` since `R_θ` is symplectic.
    pub fn rotate(&self, theta: &[f64]) -> Character {
        let mut w_x = Vec::with_capacity(self.dim());
        let mut w_xi = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let (s, c) = theta[j].sin_cos();
            w_x.push(self.w_x[j] * c - self.w_xi[j] * s);
            w_xi.push(self.w_x[j] * s + self.w_xi[j] * c);
        }
        Character { w_x, w_xi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    Polynomial(Polynomial),
    Character(Character),
    Sum(Vec<(C64, Symbol)>),
}

impl Symbol {
    pub fn x(dim: usize, j: usize) -> Self {
        Symbol::Polynomial(Polynomial::x(dim, j))
    }

    pub fn xi(dim: usize, j: usize) -> Self {
        Symbol::Polynomial(Polynomial::xi(dim, j))
    }

    pub fn mode_energy(dim: usize, j: usize) -> Self {
        Symbol::Polynomial(Polynomial::mode_energy(dim, j))
    }

    pub fn character(w_x: Vec<f64>, w_xi: Vec<f64>) -> Result<Self> {
        Ok(Symbol::Character(Character::new(w_x, w_xi)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Symbol::Polynomial(p) => p.dim(),
            Symbol::Character(c) => c.dim(),
            Symbol::Sum(parts) => parts.first().map_or(0, |(_, s)| s.dim()),
        }
    }

    pub fn eval(&self, z: &PhasePoint) -> C64 {
        match self {
            Symbol::Polynomial(p) => p.eval(z),
            Symbol::Character(c) => c.eval(z),
            Symbol::Sum(parts) => parts.iter().map(|(w, s)| w * s.eval(z)).sum(),
        }
    }

    /// `a ∘ R_θ` with `R_θ` rotating mode `j` by `e^{−iθ_j}`.
    pub fn rotate(&self, theta: &[f64]) -> Symbol {
        match self {
            Symbol::Polynomial(p) => Symbol::Polynomial(p.rotate(theta)),
            Symbol::Character(c) => Symbol::Character(c.rotate(theta)),
            Symbol::Sum(parts) => {
                Symbol::Sum(parts.iter().map(|(w, s)| (*w, s.rotate(theta))).collect())
            }
        }
    }

    /// Parses expressions such as `x1^2`, `H2`, `x1*x2 + xi1*xi2`,
    /// `0.5*xi1^2 - 2*x1` or `char(wx1, .., wxd, wxi1, .., wxid)` for a
    /// `dim`-mode oscillator. Mode indices are 1-based.
    pub fn parse(text: &str, dim: usize) -> Result<Symbol> {
        Parser { text, pos: 0, dim }.symbol()
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(1, self.pos + 1, msg)
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn symbol(mut self) -> Result<Symbol> {
        let mut poly = Polynomial::zero(self.dim);
        let mut chars: Vec<(C64, Symbol)> = Vec::new();
        let mut sign = 1.0;
        self.skip_ws();
        if self.eat('-') {
            sign = -1.0;
        }
        loop {
            match self.term()? {
                (c, None) => poly = poly.add(&c.scale(C64::new(sign, 0.0))),
                (c, Some(ch)) => chars.push((C64::new(sign, 0.0) * c.terms().values().next().copied().unwrap_or_default(), ch)),
            }
            self.skip_ws();
            if self.rest().is_empty() {
                break;
            }
            sign = if self.eat('+') {
                1.0
            } else if self.eat('-') {
                -1.0
            } else {
                return Err(self.err("expected '+' or '-'"));
            };
        }
        if poly.degree() > MAX_DEGREE {
            return Err(Error::Validation(format!(
                "polynomial degree {} exceeds {MAX_DEGREE}",
                poly.degree()
            )));
        }
        if chars.is_empty() {
            return Ok(Symbol::Polynomial(poly));
        }
        if !poly.terms().is_empty() {
            chars.insert(0, (C64::new(1.0, 0.0), Symbol::Polynomial(poly)));
        }
        if chars.len() == 1 && chars[0].0 == C64::new(1.0, 0.0) {
            return Ok(chars.pop().expect("one part").1);
        }
        Ok(Symbol::Sum(chars))
    }

    /// A product of factors. Returns the polynomial part, or for a character
    /// term its scalar coefficient (as a constant polynomial) and the character.
    fn term(&mut self) -> Result<(Polynomial, Option<Symbol>)> {
        let mut poly = Polynomial::constant(self.dim, C64::new(1.0, 0.0));
        let mut character = None;
        loop {
            self.skip_ws();
            if self.rest().starts_with("char") {
                if character.is_some() {
                    return Err(self.err("at most one character per term"));
                }
                self.pos += 4;
                character = Some(self.character()?);
            } else if self.rest().starts_with(|c: char| c.is_ascii_digit() || c == '.') {
                let v = self.number()?;
                poly = poly.scale(C64::new(v, 0.0));
            } else {
                let f = self.factor()?;
                let e = if self.eat('^') { self.integer()? } else { 1 };
                poly = poly.mul(&f.pow(e));
            }
            if !self.eat('*') {
                break;
            }
        }
        if character.is_some() && poly.degree() > 0 {
            return Err(Error::Unsupported(
                "products of characters with polynomials".into(),
            ));
        }
        Ok((poly, character))
    }

    fn factor(&mut self) -> Result<Polynomial> {
        self.skip_ws();
        let (kind, len) = if self.rest().starts_with("xi") {
            ("xi", 2)
        } else if self.rest().starts_with('x') {
            ("x", 1)
        } else if self.rest().starts_with('H') {
            ("H", 1)
        } else {
            return Err(self.err("expected x<j>, xi<j>, H<j>, char(..) or a number"));
        };
        self.pos += len;
        let j = self.integer()? as usize;
        if j == 0 || j > self.dim {
            return Err(self.err(format!("mode index {j} outside 1..={}", self.dim)));
        }
        Ok(match kind {
            "x" => Polynomial::x(self.dim, j - 1),
            "xi" => Polynomial::xi(self.dim, j - 1),
            _ => Polynomial::mode_energy(self.dim, j - 1),
        })
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let len = self.rest().find(|c: char| !c.is_ascii_digit()).unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.err("expected an integer"));
        }
        let v = self.rest()[..len].parse().map_err(|_| self.err("integer out of range"))?;
        self.pos += len;
        Ok(v)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')))
            .unwrap_or(self.rest().len());
        // Only let a sign through directly after an exponent marker.
        let s = &self.rest()[..len];
        let mut end = s.len();
        for (i, c) in s.char_indices().skip(1) {
            if matches!(c, '-' | '+') && !matches!(s.as_bytes()[i - 1], b'e' | b'E') {
                end = i;
                break;
            }
        }
        let s = &s[..end];
        let v: f64 = s.parse().map_err(|_| self.err(format!("bad number '{s}'")))?;
        self.pos += end;
        Ok(v)
    }

    fn signed_number(&mut self) -> Result<f64> {
        if self.eat('-') {
            Ok(-self.number()?)
        } else {
            self.eat('+');
            self.number()
        }
    }

    fn character(&mut self) -> Result<Symbol> {
        if !self.eat('(') {
            return Err(self.err("expected '(' after char"));
        }
        let mut w = Vec::new();
        loop {
            w.push(self.signed_number()?);
            if self.eat(')') {
                break;
            }
            if !self.eat(',') {
                return Err(self.err("expected ',' or ')'"));
            }
        }
        if w.len() != 2 * self.dim {
            return Err(self.err(format!(
                "char needs {} parameters, got {}",
                2 * self.dim,
                w.len()
            )));
        }
        let w_xi = w.split_off(self.dim);
        Symbol::character(w, w_xi)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let d = self.dim;
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({})", c)?;
            }
            for j in 0..d {
                match m[j] {
                    0 => {}
                    1 => write!(f, "*x{}", j + 1)?,
                    e => write!(f, "*x{}^{e}", j + 1)?,
                }
                match m[d + j] {
                    0 => {}
                    1 => write!(f, "*xi{}", j + 1)?,
                    e => write!(f, "*xi{}^{e}", j + 1)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point() -> PhasePoint {
        PhasePoint::new(vec![0.3, -1.2], vec![0.7, 0.4]).unwrap()
    }

    #[test]
    fn parse_and_eval() {
        let z = point();
        let s = Symbol::parse("x1^2", 2).unwrap();
        assert!((s.eval(&z).re - 0.09).abs() < 1e-15);
        let s = Symbol::parse("H2", 2).unwrap();
        assert!((s.eval(&z).re - 0.5 * (1.44 + 0.16)).abs() < 1e-15);
        let s = Symbol::parse("x1*x2 + xi1*xi2 - 2*x1", 2).unwrap();
        assert!((s.eval(&z).re - (0.3 * -1.2 + 0.7 * 0.4 - 0.6)).abs() < 1e-15);
        let s = Symbol::parse("0.5 * char(1, 0, 0, -2)", 2).unwrap();
        let phase = 0.7 * 1.0 - (-1.2) * (-2.0);
        let want = Complex64::from_polar(0.5, phase);
        assert!((s.eval(&z) - want).norm() < 1e-15);
        let s = Symbol::parse("x1 + char(1e-1, 0, 0, 0)", 2).unwrap();
        assert!(matches!(s, Symbol::Sum(ref p) if p.len() == 2));
    }

    #[test]
    fn parse_errors() {
        assert!(Symbol::parse("x3", 2).is_err());
        assert!(Symbol::parse("y1", 2).is_err());
        assert!(Symbol::parse("x1^9", 2).is_err());
        assert!(Symbol::parse("x1*char(1,0,0,0)", 2).is_err());
        assert!(Symbol::parse("char(1,0)", 2).is_err());
        assert!(Symbol::parse("x1 x2", 2).is_err());
    }

    #[test]
    fn rotation_is_composition() {
        let z = point();
        let theta = [0.4f64, -2.1];
        let rz = {
            let mut x = z.x.clone();
            let mut xi = z.xi.clone();
            for j in 0..2 {
                let (s, c) = theta[j].sin_cos();
                x[j] = z.x[j] * c + z.xi[j] * s;
                xi[j] = -z.x[j] * s + z.xi[j] * c;
            }
            PhasePoint::new(x, xi).unwrap()
        };
        for text in ["x1^3*xi2 + H1", "x1*x2 + xi1*xi2", "char(0.3, -1, 2, 0.5)"] {
            let a = Symbol::parse(text, 2).unwrap();
            let lhs = a.rotate(&theta).eval(&z);
            let rhs = a.eval(&rz);
            assert!((lhs - rhs).norm() < 1e-12, "{text}: {lhs} vs {rhs}");
        }
    }
}
