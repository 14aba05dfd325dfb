//! Experiment configs: plain `key = value` lines with `#` comments.
//!
//! ```text
//! spec = sqrt2.spec
//! energy = 1/2, 1/2
//! z0 = from-witness
//! hbar_start = 0.05
//! hbar_ratio = 1/2
//! hbar_count = 6
//! symbols = x1^2; H1; char(0.8, -0.5, 0.6, 1.1)
//! tail_tol = 1e-12
//! out = out/sqrt2
//! ```
//!
//! An explicit starting point replaces `z0 = from-witness` with
//! `z0 = x1 x2 | xi1 xi2`. Convex combinations repeat `convex_point` once per
//! torus and give `convex_weights`.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use scarkit::freqarith::exact::{parse_rational, to_f64};
use scarkit::{Error, PhasePoint, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    FromWitness,
    Explicit(PhasePoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Frequency spec file, relative to the config file's directory.
    pub spec: PathBuf,
    pub energy: Vec<f64>,
    pub z0: StartPoint,
    pub hbar_start: f64,
    pub hbar_ratio: f64,
    pub hbar_count: usize,
    /// Probe symbols as written; empty selects the seeded default set.
    pub symbols: Vec<String>,
    pub tail_tol: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub convex_points: Vec<PhasePoint>,
    pub convex_weights: Vec<f64>,
    pub husimi_points: usize,
    pub husimi_radius: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            spec: PathBuf::new(),
            energy: Vec::new(),
            z0: StartPoint::FromWitness,
            hbar_start: 0.05,
            hbar_ratio: 0.5,
            hbar_count: 6,
            symbols: Vec::new(),
            tail_tol: 1e-12,
            out: PathBuf::from("out"),
            seed: 0,
            convex_points: Vec::new(),
            convex_weights: Vec::new(),
            husimi_points: 81,
            husimi_radius: 2.0,
        }
    }
}

fn number(text: &str, line: usize, column: usize) -> Result<f64> {
    let text = text.trim();
    if let Ok(v) = text.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    parse_rational(text)
        .map(|q| to_f64(&q))
        .map_err(|e| Error::Parse { line, column, message: e })
}

fn number_list(text: &str, line: usize, column: usize) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| number(t, line, column))
        .collect()
}

fn point(text: &str, line: usize, column: usize) -> Result<PhasePoint> {
    let Some((x, xi)) = text.split_once('|') else {
        return Err(Error::Parse {
            line,
            column,
            message: "expected `x1 … xd | xi1 … xid`".into(),
        });
    };
    let x = number_list(x, line, column)?;
    let xi = number_list(xi, line, column)?;
    PhasePoint::new(x, xi).map_err(|e| Error::Parse {
        line,
        column,
        message: e.to_string(),
    })
}

fn render_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

fn render_point(z: &PhasePoint) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    format!("{} | {}", join(&z.x), join(&z.xi))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen_spec = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    message: "expected `key = value`".into(),
                });
            };
            let column = key.len() + 2 + (value.len() - value.trim_start().len());
            let key = key.trim();
            let value = value.trim();
            let integer = |v: &str| -> Result<u64> {
                v.parse().map_err(|_| Error::Parse {
                    line,
                    column,
                    message: format!("expected a nonnegative integer, got `{v}`"),
                })
            };
            match key {
                "spec" => {
                    cfg.spec = PathBuf::from(value);
                    seen_spec = true;
                }
                "energy" => cfg.energy = number_list(value, line, column)?,
                "z0" if value == "from-witness" => cfg.z0 = StartPoint::FromWitness,
                "z0" => cfg.z0 = StartPoint::Explicit(point(value, line, column)?),
                "hbar_start" => cfg.hbar_start = number(value, line, column)?,
                "hbar_ratio" => cfg.hbar_ratio = number(value, line, column)?,
                "hbar_count" => cfg.hbar_count = integer(value)? as usize,
                "symbols" if value == "default" => cfg.symbols.clear(),
                "symbols" => {
                    cfg.symbols = value
                        .split(';')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                }
                "tail_tol" => cfg.tail_tol = number(value, line, column)?,
                "out" => cfg.out = PathBuf::from(value),
                "seed" => cfg.seed = integer(value)?,
                "convex_point" => cfg.convex_points.push(point(value, line, column)?),
                "convex_weights" => cfg.convex_weights = number_list(value, line, column)?,
                "husimi_points" => cfg.husimi_points = integer(value)? as usize,
                "husimi_radius" => cfg.husimi_radius = number(value, line, column)?,
                _ => {
                    return Err(Error::Parse {
                        line,
                        column: raw.find(key).map_or(1, |c| c + 1),
                        message: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        if !seen_spec {
            return Err(Error::Validation("missing `spec`".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.energy.is_empty() {
            return Err(Error::Validation("missing `energy`".into()));
        }
        if !(self.hbar_ratio > 0.0 && self.hbar_ratio < 1.0) {
            return Err(Error::Validation(format!("hbar_ratio must lie in (0, 1), got {}", self.hbar_ratio)));
        }
        if self.hbar_count < 3 {
            return Err(Error::Validation(format!("hbar_count must be at least 3, got {}", self.hbar_count)));
        }
        if !(self.hbar_start > 0.0) {
            return Err(Error::Validation(format!("hbar_start must be positive, got {}", self.hbar_start)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::Validation(format!("tail_tol must lie in (0, 1), got {}", self.tail_tol)));
        }
        if self.convex_points.len() != self.convex_weights.len() {
            return Err(Error::Validation(format!(
                "{} convex points but {} weights",
                self.convex_points.len(),
                self.convex_weights.len()
            )));
        }
        if self.husimi_points < 2 || !(self.husimi_radius > 0.0) {
            return Err(Error::Validation("husimi grid needs at least 2 points and a positive radius".into()));
        }
        Ok(())
    }

    /// Canonical text; [`ExperimentConfig::parse`] inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "spec = {}", self.spec.display());
        let _ = writeln!(s, "energy = {}", render_list(&self.energy));
        match &self.z0 {
            StartPoint::FromWitness => {
                let _ = writeln!(s, "z0 = from-witness");
            }
            StartPoint::Explicit(z) => {
                let _ = writeln!(s, "z0 = {}", render_point(z));
            }
        }
        let _ = writeln!(s, "hbar_start = {:?}", self.hbar_start);
        let _ = writeln!(s, "hbar_ratio = {:?}", self.hbar_ratio);
        let _ = writeln!(s, "hbar_count = {}", self.hbar_count);
        if self.symbols.is_empty() {
            let _ = writeln!(s, "symbols = default");
        } else {
            let _ = writeln!(s, "symbols = {}", self.symbols.join("; "));
        }
        let _ = writeln!(s, "tail_tol = {:?}", self.tail_tol);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        for z in &self.convex_points {
            let _ = writeln!(s, "convex_point = {}", render_point(z));
        }
        if !self.convex_weights.is_empty() {
            let _ = writeln!(s, "convex_weights = {}", render_list(&self.convex_weights));
        }
        let _ = writeln!(s, "husimi_points = {}", self.husimi_points);
        let _ = writeln!(s, "husimi_radius = {:?}", self.husimi_radius);
        s
    }

    pub fn spec_path(&self, config_path: &Path) -> PathBuf {
        match config_path.parent() {
            Some(dir) if self.spec.is_relative() => dir.join(&self.spec),
            _ => self.spec.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# comment line
spec = sqrt2.spec
energy = 1/2, 1/2     # exact halves
z0 = 0.5 -0.25 | 1 0.125
hbar_start = 0.05
hbar_ratio = 1/2
hbar_count = 5
symbols = x1^2; H2; char(0.8, -0.5, 0.6, 1.1)
tail_tol = 1e-12
out = results
seed = 7
";

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.energy, vec![0.5, 0.5]);
        assert_eq!(cfg.hbar_ratio, 0.5);
        assert_eq!(cfg.symbols.len(), 3);
        assert_eq!(cfg.seed, 7);
        match &cfg.z0 {
            StartPoint::Explicit(z) => assert_eq!(z.xi, vec![1.0, 0.125]),
            StartPoint::FromWitness => panic!("expected an explicit point"),
        }
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn reports_positions() {
        let err = ExperimentConfig::parse("spec = a\nenergy = 1/0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 10, .. }), "{err}");
        let err = ExperimentConfig::parse("spec = a\n  colour = red\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 3, .. }), "{err}");
        assert!(ExperimentConfig::parse("energy = 1\n").is_err());
        assert!(ExperimentConfig::parse("spec = a\nenergy = 1\nhbar_ratio = 1\n").is_err());
        assert!(ExperimentConfig::parse("spec = a\nenergy = 1\nhbar_count = 2\n").is_err());
        assert!(ExperimentConfig::parse("spec = a\nenergy = 1\ntail_tol = 0\n").is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6f64..1e6, 1e-15f64..1e-3]
    }

    fn config() -> impl Strategy<Value = ExperimentConfig> {
        let points = prop::collection::vec(
            (prop::collection::vec(finite(), 2), prop::collection::vec(finite(), 2)),
            0..3,
        );
        (
            prop::collection::vec(finite(), 1..4),
            prop::option::of((prop::collection::vec(finite(), 2), prop::collection::vec(finite(), 2))),
            (1e-4f64..1.0, 0.01f64..0.99, 3usize..20, 1e-14f64..0.5),
            prop::sample::subsequence(vec!["x1", "xi2^3", "H1 + 2*H2", "char(0.1, 0.2, 0.3, 0.4)"], 0..4),
            (any::<u64>(), points, 2usize..400, 0.1f64..10.0),
        )
            .prop_map(|(energy, z0, (start, ratio, count, tail), symbols, (seed, points, hp, hr))| {
                let weights = vec![1.0; points.len()];
                ExperimentConfig {
                    spec: PathBuf::from("dir/omega.spec"),
                    energy,
                    z0: z0.map_or(StartPoint::FromWitness, |(x, xi)| {
                        StartPoint::Explicit(PhasePoint::new(x, xi).unwrap())
                    }),
                    hbar_start: start,
                    hbar_ratio: ratio,
                    hbar_count: count,
                    symbols: symbols.into_iter().map(String::from).collect(),
                    tail_tol: tail,
                    out: PathBuf::from("out/run"),
                    seed,
                    convex_points: points
                        .into_iter()
                        .map(|(x, xi)| PhasePoint::new(x, xi).unwrap())
                        .collect(),
                    convex_weights: weights,
                    husimi_points: hp,
                    husimi_radius: hr,
                }
            })
    }

    proptest! {
        #[test]
        fn text_round_trip(cfg in config()) {
            let text = cfg.to_text();
            let back = ExperimentConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
