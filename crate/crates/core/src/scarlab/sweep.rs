//! Geometric `ħ` sweeps with log–log slope fits.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{build_scar, convex_scar, residuals};
use crate::csvout::{self, Table};
use crate::error::{Error, Result};
use crate::fockstate::{expectation, FockState};
use crate::freqarith::HarmonicDecomposition;
use crate::phasespace::{orbit_average, sigma_membership, PhasePoint, Symbol};
use crate::spectral::{hbar0, TargetEigenvalue};
use crate::C64;

/// Largest-`ħ` points left out of slope fits.
pub const SLOPE_DROP: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub energy: Vec<f64>,
    /// Starting point; the `Σ_ℋ` witness when absent.
    pub z0: Option<PhasePoint>,
    pub hbars: Vec<f64>,
    pub symbols: Vec<(String, Symbol)>,
    pub tail_tol: f64,
    /// Points and weights of a convex combination; a single scar when empty.
    pub convex: Vec<(PhasePoint, f64)>,
    /// Symbols used to tell the tori of `convex` apart.
    pub separating: Vec<Symbol>,
}

/// `start · ratio^m` for `m < count`.
pub fn hbar_schedule(start: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && start.is_finite()) || !(ratio > 0.0 && ratio < 1.0) || count < 3 {
        return Err(Error::Validation(format!(
            "need start > 0, ratio in (0, 1) and count ≥ 3; got {start}, {ratio}, {count}"
        )));
    }
    Ok((0..count).map(|m| start * ratio.powi(m as i32)).collect())
}

/// `x1`, `x1²`, every `H_j` and two characters with seeded random `w`.
pub fn default_probes(d: usize, seed: u64) -> Vec<(String, Symbol)> {
    let mut out = vec![
        ("x1".to_string(), Symbol::x(d, 0)),
        ("x1^2".to_string(), Symbol::parse("x1^2", d).expect("valid")),
    ];
    for j in 1..=d {
        out.push((format!("H{j}"), Symbol::mode_energy(d, j - 1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2 {
        let w: Vec<f64> = (0..2 * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let text = format!(
            "char({})",
            w.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
        );
        let symbol = Symbol::parse(&text, d).expect("valid");
        out.push((text, symbol));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub hbar: f64,
    pub observable: String,
    pub value: f64,
    pub reference: f64,
    pub residual: f64,
}

/// A slope band checked in the summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub observable: &'static str,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const GAP: Band = Band {
        observable: "gap:max",
        lo: 0.35,
        hi: 1.1,
    };
    pub const NORMALIZATION: Band = Band {
        observable: "c_hbar",
        lo: 0.35,
        hi: f64::INFINITY,
    };
    pub const NORM: Band = Band {
        observable: "norm",
        lo: 0.4,
        hi: f64::INFINITY,
    };
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub hbars: Vec<f64>,
    pub rows: Vec<ReportRow>,
    pub slopes: BTreeMap<String, f64>,
    pub metadata: Vec<(String, String)>,
    /// Per-`ħ` failures; the sweep carries on past them.
    pub failures: Vec<(f64, String)>,
    pub targets: Vec<TargetEigenvalue>,
    /// The state at the smallest successful `ħ`.
    pub final_state: Option<FockState>,
}

/// Least-squares slope of `ln residual` against `ln ħ`, dropping the
/// [`SLOPE_DROP`] largest `ħ` when at least two points remain.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(h, r)| *h > 0.0 && *r > 0.0 && r.is_finite())
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts.len() >= SLOPE_DROP + 2 {
        pts.drain(..SLOPE_DROP);
    }
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (h, r) in &pts {
        let (x, y) = (h.ln(), r.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    (denom != 0.0).then(|| (n * sxy - sx * sy) / denom)
}

impl ConvergenceReport {
    /// `(ħ, residual)` pairs of one observable, in sweep order.
    pub fn series(&self, observable: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.observable == observable)
            .map(|r| (r.hbar, r.residual))
            .collect()
    }

    /// Residual at the smallest `ħ` divided by the one at the largest.
    pub fn decay_ratio(&self, observable: &str) -> Option<f64> {
        let s = self.series(observable);
        let first = s.iter().max_by(|a, b| a.0.total_cmp(&b.0))?;
        let last = s.iter().min_by(|a, b| a.0.total_cmp(&b.0))?;
        (first.1 > 0.0).then(|| last.1 / first.1)
    }

    pub fn band_holds(&self, band: Band) -> Option<bool> {
        self.slopes
            .get(band.observable)
            .map(|s| *s >= band.lo && *s <= band.hi)
    }

    pub fn to_csv(&self, comments: &[String]) -> String {
        let columns = ["hbar", "observable", "value", "reference", "residual"].map(String::from);
        let mut table = Table::new(comments, &columns);
        for r in &self.rows {
            table.row([
                csvout::num(r.hbar),
                r.observable.clone(),
                csvout::num(r.value),
                csvout::num(r.reference),
                csvout::num(r.residual),
            ]);
        }
        table.finish()
    }

    pub fn targets_csv(&self, comments: &[String]) -> String {
        let Some(first) = self.targets.first() else {
            return Table::new(comments, &["hbar".to_string()]).finish();
        };
        let dn = first.lambda.len();
        let mut columns = vec!["hbar".to_string()];
        for n in 1..=dn {
            columns.extend([format!("N_{n}"), format!("E_{n}"), format!("lambda_{n}")]);
        }
        columns.push("lambda_total".into());
        columns.extend((1..=first.witness.dim()).map(|j| format!("witness_k{j}")));
        let mut table = Table::new(comments, &columns);
        for t in &self.targets {
            let mut cells = vec![csvout::num(t.hbar)];
            for n in 0..dn {
                cells.extend([t.levels[n].to_string(), csvout::num(t.energy[n]), csvout::num(t.lambda[n])]);
            }
            cells.push(csvout::num(t.lambda_total));
            cells.extend(t.witness.0.iter().map(|k| k.to_string()));
            table.row(cells);
        }
        table.finish()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "{k}: {v}");
        }
        let _ = writeln!(s, "slope fits drop the {SLOPE_DROP} largest hbar values");
        let _ = writeln!(s, "slopes:");
        for (k, v) in &self.slopes {
            let _ = writeln!(s, "  {k}: {v:.6}");
        }
        let _ = writeln!(s, "bands:");
        let convex = self.rows.iter().any(|r| r.observable == "norm");
        let mut bands = vec![Band::GAP];
        if convex {
            bands.push(Band::NORM);
        } else {
            bands.push(Band::NORMALIZATION);
        }
        for band in bands {
            let verdict = match self.band_holds(band) {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "n/a",
            };
            let _ = writeln!(s, "  {} slope in [{}, {}]: {verdict}", band.observable, band.lo, band.hi);
        }
        if let Some(r) = self.decay_ratio("gap:max") {
            let verdict = if r <= 0.25 { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  gap:max smallest/largest = {r:.6} (<= 0.25): {verdict}");
        }
        if let Some(r) = self.decay_ratio("cross:max") {
            let verdict = if r <= 0.2 { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  cross:max smallest/largest = {r:.6} (<= 0.2): {verdict}");
        }
        if !self.failures.is_empty() {
            let _ = writeln!(s, "failures:");
            for (h, e) in &self.failures {
                let _ = writeln!(s, "  hbar = {}: {e}", csvout::num(*h));
            }
        }
        s
    }
}

struct Step {
    rows: Vec<ReportRow>,
    target: TargetEigenvalue,
    state: FockState,
}

fn row(hbar: f64, observable: impl Into<String>, value: f64, reference: f64, residual: f64) -> ReportRow {
    ReportRow {
        hbar,
        observable: observable.into(),
        value,
        reference,
        residual,
    }
}

fn step(
    dec: &HarmonicDecomposition,
    cfg: &SweepConfig,
    z0: &PhasePoint,
    references: &[C64],
    hbar: f64,
) -> Result<Step> {
    let mut rows = Vec::new();
    let (state, target, parts) = if cfg.convex.is_empty() {
        let scar = build_scar(dec, z0, &cfg.energy, hbar, cfg.tail_tol)?;
        rows.push(row(hbar, "c_hbar", scar.c_hbar, 1.0, (scar.c_hbar - 1.0).abs()));
        (scar.state.clone(), scar.target.clone(), vec![scar])
    } else {
        let mix = convex_scar(dec, &cfg.convex, &cfg.energy, hbar, cfg.tail_tol, &cfg.separating)?;
        for (j, part) in mix.parts.iter().enumerate() {
            rows.push(row(hbar, format!("c_hbar:{}", j + 1), part.c_hbar, 1.0, (part.c_hbar - 1.0).abs()));
        }
        let norm = mix.state.norm();
        rows.push(row(hbar, "norm", norm, 1.0, (norm - 1.0).abs()));
        (mix.state, mix.parts[0].target.clone(), mix.parts)
    };
    let mut worst = 0.0f64;
    for ((name, a), reference) in cfg.symbols.iter().zip(references) {
        let e = expectation(&state, &state, a)?;
        let gap = (e - reference).norm();
        worst = worst.max(gap);
        rows.push(row(hbar, format!("gap:{name}"), e.re, reference.re, gap));
    }
    if !cfg.symbols.is_empty() {
        rows.push(row(hbar, "gap:max", worst, 0.0, worst));
    }
    if parts.len() > 1 {
        let mut cross = 0.0f64;
        for i in 0..parts.len() {
            for j in 0..parts.len() {
                if i != j {
                    for (_, a) in &cfg.symbols {
                        let c = expectation(&parts[i].state, &parts[j].state, a)?;
                        cross = cross.max(c.norm());
                    }
                }
            }
        }
        rows.push(row(hbar, "cross:max", cross, 0.0, cross));
    }
    let probes: Vec<Symbol> = cfg.symbols.iter().map(|(_, a)| a.clone()).collect();
    let res = residuals(dec, &state, &cfg.energy, &probes)?;
    for n in 0..dec.d_omega() {
        let c = res.concentration[n];
        rows.push(row(hbar, format!("concentration:{}", n + 1), c, 0.0, c));
        let v = res.invariance[n];
        rows.push(row(hbar, format!("invariance:{}", n + 1), v, 0.0, v));
    }
    Ok(Step { rows, target, state })
}

/// Runs the configured construction for every `ħ` and fits slopes. Fails
/// only on problems shared by all rows (bad config, `E ∉ Σ_ℋ`).
pub fn sweep(dec: &HarmonicDecomposition, cfg: &SweepConfig) -> Result<ConvergenceReport> {
    let witness = sigma_membership(dec, &cfg.energy)?;
    if cfg.hbars.windows(2).any(|w| w[1] >= w[0]) || cfg.hbars.is_empty() {
        return Err(Error::Validation("the ħ schedule must be strictly decreasing".into()));
    }
    let z0 = cfg.z0.clone().unwrap_or_else(|| witness.z0());
    let references: Vec<C64> = cfg
        .symbols
        .iter()
        .map(|(_, a)| {
            if cfg.convex.is_empty() {
                orbit_average(dec, a, &z0)
            } else {
                cfg.convex
                    .iter()
                    .map(|(z, w)| Ok(*w * orbit_average(dec, a, z)?))
                    .sum()
            }
        })
        .collect::<Result<_>>()?;
    let results: Vec<Result<Step>> = cfg
        .hbars
        .par_iter()
        .map(|&h| step(dec, cfg, &z0, &references, h))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut targets = Vec::new();
    let mut final_state = None;
    for (&h, r) in cfg.hbars.iter().zip(results) {
        match r {
            Ok(s) => {
                rows.extend(s.rows);
                targets.push(s.target);
                final_state = Some(s.state);
            }
            Err(e) => failures.push((h, e.to_string())),
        }
    }
    let mut names: Vec<String> = rows.iter().map(|r| r.observable.clone()).collect();
    names.dedup();
    names.sort();
    names.dedup();
    let mut report = ConvergenceReport {
        hbars: cfg.hbars.clone(),
        rows,
        slopes: BTreeMap::new(),
        metadata: Vec::new(),
        failures,
        targets,
        final_state,
    };
    for name in names {
        if let Some(s) = fit_slope(&report.series(&name)) {
            report.slopes.insert(name, s);
        }
    }
    let fmt_vec = |v: &[f64]| v.iter().map(|x| csvout::num(*x)).collect::<Vec<_>>().join(" ");
    report.metadata = vec![
        ("frequencies".into(), fmt_vec(dec.omega())),
        ("energy".into(), fmt_vec(&cfg.energy)),
        ("z0.x".into(), fmt_vec(&z0.x)),
        ("z0.xi".into(), fmt_vec(&z0.xi)),
        ("hbar0".into(), csvout::num(hbar0(dec, &cfg.energy)?)),
        ("hbars".into(), fmt_vec(&cfg.hbars)),
        ("tail_tol".into(), csvout::num(cfg.tail_tol)),
        (
            "symbols".into(),
            cfg.symbols.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join("; "),
        ),
    ];
    if !cfg.convex.is_empty() {
        report.metadata.push((
            "convex weights".into(),
            fmt_vec(&cfg.convex.iter().map(|c| c.1).collect::<Vec<_>>()),
        ));
    }
    Ok(report)
}
