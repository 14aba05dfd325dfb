//! Frequency spec file:
//!
//! ```text
//! # comment
//! generators = one:1, sqrt2:sqrt(2)
//! omega_1 = 1 0
//! omega_2 = 0 1
//! numeric = 1, 1.4142135623730950488016887242   # optional cross-check
//! ```

use super::exact::{format_rational, parse_rational, Q};
use super::{FrequencySpec, GeneratorBasis};
use crate::error::{Error, Result};

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Column (1-based) of `needle` inside `line`, for diagnostics.
fn column_of(line: &str, needle: &str) -> usize {
    line.find(needle).map(|i| line[..i].chars().count() + 1).unwrap_or(1)
}

/// Whitespace-separated tokens with their byte offsets.
fn tokens(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split_whitespace()
        .map(move |tok| (tok.as_ptr() as usize - s.as_ptr() as usize, tok))
}

pub(super) fn parse(text: &str) -> Result<FrequencySpec> {
    let mut generators: Option<(usize, GeneratorBasis)> = None;
    let mut rows: Vec<(usize, usize, &str)> = Vec::new();
    let mut declared: Option<(usize, Vec<Q>)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(line_no, 1, "expected `key = value`"));
        };
        let key = key.trim();
        match key {
            "generators" => {
                if generators.is_some() {
                    return Err(Error::parse(line_no, 1, "duplicate `generators`"));
                }
                let mut entries = Vec::new();
                for item in value.split(',') {
                    let col = column_of(raw, item.trim());
                    let Some((label, literal)) = item.split_once(':') else {
                        return Err(Error::parse(line_no, col, "expected `label:value`"));
                    };
                    entries.push((label.trim().to_string(), literal.trim().to_string()));
                }
                let basis = GeneratorBasis::new(&entries).map_err(|e| {
                    Error::parse(line_no, column_of(raw, value.trim()), e.to_string())
                })?;
                generators = Some((line_no, basis));
            }
            "numeric" => {
                let values = value
                    .split(',')
                    .map(|tok| {
                        parse_rational(tok)
                            .map_err(|e| Error::parse(line_no, column_of(raw, tok.trim()), e))
                    })
                    .collect::<Result<Vec<_>>>()?;
                declared = Some((line_no, values));
            }
            _ => {
                let Some(index) = key
                    .strip_prefix("omega_")
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&j| j >= 1)
                else {
                    return Err(Error::parse(line_no, column_of(raw, key), format!("unknown key `{key}`")));
                };
                rows.push((line_no, index, value));
            }
        }
    }

    let Some((gen_line, basis)) = generators else {
        return Err(Error::parse(1, 1, "missing `generators` line"));
    };
    if rows.is_empty() {
        return Err(Error::parse(gen_line, 1, "no `omega_j` lines"));
    }
    rows.sort_by_key(|r| r.1);
    let mut coords = Vec::with_capacity(rows.len());
    for (expected, (line_no, index, value)) in rows.iter().enumerate() {
        if *index != expected + 1 {
            return Err(Error::parse(
                *line_no,
                1,
                format!("omega indices must be 1..d without gaps or repeats (found omega_{index})"),
            ));
        }
        let raw = text.lines().nth(line_no - 1).unwrap_or("");
        let offset = raw.find('=').map_or(0, |eq| eq + 1);
        let mut row = Vec::new();
        for (pos, tok) in tokens(value) {
            let q = parse_rational(tok).map_err(|e| {
                Error::parse(*line_no, raw[..offset + pos].chars().count() + 1, e)
            })?;
            row.push(q);
        }
        if row.len() != basis.len() {
            return Err(Error::parse(
                *line_no,
                1,
                format!("expected {} coordinates, found {}", basis.len(), row.len()),
            ));
        }
        coords.push(row);
    }
    let spec = FrequencySpec::new(basis, coords)
        .map_err(|e| Error::parse(rows[0].0, 1, e.to_string()))?;
    if let Some((line_no, values)) = declared {
        spec.check_declared(&values)
            .map_err(|e| Error::parse(line_no, 1, e.to_string()))?;
    }
    Ok(spec)
}

pub(super) fn render(spec: &FrequencySpec) -> String {
    let basis = spec.basis();
    let gens: Vec<String> = basis
        .labels()
        .iter()
        .zip(basis.sources())
        .map(|(l, s)| format!("{l}:{s}"))
        .collect();
    let mut out = format!("generators = {}\n", gens.join(", "));
    for (j, row) in spec.coords().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(format_rational).collect();
        out.push_str(&format!("omega_{} = {}\n", j + 1, cells.join(" ")));
    }
    out
}
