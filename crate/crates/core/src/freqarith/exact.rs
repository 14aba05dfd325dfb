//! Exact rational helpers: literal parsing, row reduction and lattice
//! normalisation of rational vectors.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

/// Digits kept when a generator is declared as `sqrt(n)`.
pub const SQRT_DIGITS: u32 = 60;

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_frac(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Out of f64 range; fall back on the sign.
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Parses `p/q`, a signed integer or a finite decimal into an exact rational.
pub fn parse_rational(text: &str) -> Result<Q, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty rational".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let p: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator `{}`", num.trim()))?;
        let q: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator `{}`", den.trim()))?;
        if q.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Q::new(p, q));
    }
    parse_decimal(s).map(|(q, _)| q)
}

/// Parses a decimal literal exactly. Also returns the number of significant
/// digits when the literal has a fractional part (`None` for integers).
pub fn parse_decimal(text: &str) -> Result<(Q, Option<usize>), String> {
    let s = text.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = body[i + 1..]
                .parse()
                .map_err(|_| format!("bad exponent in `{s}`"))?;
            (&body[..i], e)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("bad number `{s}`"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("bad number `{s}`"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Q::from_integer(digits.parse::<BigInt>().unwrap_or_default());
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    if scale >= 0 {
        value *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    if neg {
        value = -value;
    }
    let significant = if frac_part.is_empty() && exponent >= 0 {
        None
    } else {
        Some(digits.trim_start_matches('0').len())
    };
    Ok((value, significant))
}

/// `√n` truncated to [`SQRT_DIGITS`] decimals.
pub fn sqrt_decimal(n: &BigInt) -> Result<Q, String> {
    if n.sign() == Sign::Minus {
        return Err("square root of a negative number".into());
    }
    let scale = num_traits::pow(BigInt::from(10), SQRT_DIGITS as usize);
    let root = (n * &scale * &scale).sqrt();
    Ok(Q::new(root, scale))
}

pub fn format_rational(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Incrementally built row-echelon basis over Q.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    rows: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut r = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !r[p].is_zero() {
                let f = r[p].clone() / &row[p];
                for (x, y) in r.iter_mut().zip(row) {
                    *x -= &f * y;
                }
            }
        }
        r
    }

    /// Adds `v` when it is independent of the rows so far; reports whether
    /// the rank grew.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        let r = self.reduce(v);
        match r.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                self.rows.push(r);
                self.pivots.push(p);
                true
            }
            None => false,
        }
    }
}

/// Rank over Q of a list of rows.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut e = Echelon::default();
    rows.iter().filter(|r| e.insert(r)).count()
}

/// Greedy first-pivot basis selection: indices of the rows that raise the
/// rank, scanned in order.
pub fn pivot_rows(rows: &[Vec<Q>]) -> Vec<usize> {
    let mut e = Echelon::default();
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| e.insert(r).then_some(i))
        .collect()
}

/// Solves `Σ_i c_i basis[i] = target` for `c`. `basis` must be independent.
pub fn solve_in_span(basis: &[Vec<Q>], target: &[Q]) -> Option<Vec<Q>> {
    let n = basis.len();
    let m = target.len();
    // Augmented system with unknowns c_i: columns are basis rows.
    let mut a: Vec<Vec<Q>> = (0..m)
        .map(|r| {
            let mut row: Vec<Q> = basis.iter().map(|b| b[r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivot_of_col = vec![usize::MAX; n];
    for col in 0..n {
        let p = (pivot_row..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot_row, p);
        let inv = Q::one() / &a[pivot_row][col];
        for x in a[pivot_row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m {
            if r != pivot_row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let (src, dst) = if r < pivot_row {
                    let (lo, hi) = a.split_at_mut(pivot_row);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = a.split_at_mut(r);
                    (&lo[pivot_row], &mut hi[0])
                };
                for (x, y) in dst.iter_mut().zip(src) {
                    *x -= &f * y;
                }
            }
        }
        pivot_of_col[col] = pivot_row;
        pivot_row += 1;
    }
    // Remaining rows must be consistent.
    if a[pivot_row..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    Some((0..n).map(|c| a[pivot_of_col[c]][n].clone()).collect())
}

/// Smallest nonzero absolute entry `[ν]`.
pub fn min_abs_nonzero(v: &[Q]) -> Option<Q> {
    v.iter().filter(|x| !x.is_zero()).map(|x| x.abs()).min()
}

/// For a nonzero rational vector `ν`, returns `([ν], K, k)` where `K` is the
/// least positive integer with `k = K [ν]⁻¹ ν ∈ Z^d`.
pub fn primitive_direction(nu: &[Q]) -> Option<(Q, BigInt, Vec<BigInt>)> {
    let m = min_abs_nonzero(nu)?;
    let scaled: Vec<Q> = nu.iter().map(|x| x / &m).collect();
    let k_mult = scaled
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let k = scaled
        .iter()
        .map(|x| (x * Q::from_integer(k_mult.clone())).to_integer())
        .collect();
    Some((m, k_mult, k))
}
