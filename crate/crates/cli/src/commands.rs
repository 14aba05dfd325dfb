use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use scarkit::csvout::{self, Table};
use scarkit::freqarith::exact::format_rational;
use scarkit::freqarith::{decompose, rational_span};
use scarkit::phasespace::{sigma_membership, ReducedDensity};
use scarkit::scarlab::{build_scar, convex_scar, default_probes, hbar_schedule, sweep, SweepConfig};
use scarkit::spectral::{enumerate_window, levels_csv};
use scarkit::{Error, FockState, FrequencySpec, HarmonicDecomposition, PhasePoint, Result, Symbol};

use crate::config::{ExperimentConfig, StartPoint};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First comment line of every output: tool version and a digest of the
/// input that produced it.
pub fn header(kind: &str, text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("scarkit {VERSION}, {kind} sha256 {hex}")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<(String, HarmonicDecomposition)> {
    let text = read(path)?;
    let spec = FrequencySpec::parse(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    Ok((text, decompose(&spec)?))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

pub fn analyze(spec_path: &Path) -> Result<String> {
    let (text, dec) = load_spec(spec_path)?;
    let (d_omega, pivots) = rational_span(dec.spec());
    let conductor = |c: &scarkit::PeriodicComponent, sigma: i8| {
        c.conductor(sigma).map_or_else(|_| "none".to_string(), |v| v.to_string())
    };
    let list = |v: &[String]| format!("({})", v.join(", "));
    let mut out = format!("# {}\n", header("spec", &text));
    out.push_str(&format!(
        "frequencies = {}\n",
        list(&dec.omega().iter().map(|w| format!("{w}")).collect::<Vec<_>>())
    ));
    out.push_str(&format!("d_omega = {d_omega}\n"));
    out.push_str(&format!(
        "pivots = {}\n",
        list(&pivots.iter().map(|p| format!("omega_{}", p + 1)).collect::<Vec<_>>())
    ));
    let mut table = Table::new(
        &[],
        &["n", "v", "nu", "T", "k", "conductor(+)", "conductor(-)"].map(String::from),
    );
    for c in dec.components() {
        table.row([
            (c.index + 1).to_string(),
            format!("{}", c.v),
            list(&c.nu.iter().map(format_rational).collect::<Vec<_>>()).replace(", ", " "),
            format!("{}", c.period),
            list(&c.k.iter().map(|k| k.to_string()).collect::<Vec<_>>()).replace(", ", " "),
            conductor(c, 1),
            conductor(c, -1),
        ]);
    }
    out.push_str(&table.finish());
    Ok(out)
}

struct Experiment {
    cfg: ExperimentConfig,
    dec: HarmonicDecomposition,
    symbols: Vec<(String, Symbol)>,
    header: String,
}

fn load_experiment(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<Experiment> {
    let mut cfg = ExperimentConfig::parse(&read(config_path)?)?;
    if let Some(out) = out {
        cfg.out = out;
    } else if cfg.out.is_relative() {
        if let Some(dir) = config_path.parent() {
            cfg.out = dir.join(&cfg.out);
        }
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let (spec_text, dec) = load_spec(&cfg.spec_path(config_path))?;
    let d = dec.dim();
    let symbols = if cfg.symbols.is_empty() {
        default_probes(d, cfg.seed)
    } else {
        cfg.symbols
            .iter()
            .map(|text| Ok((text.clone(), Symbol::parse(text, d)?)))
            .collect::<Result<_>>()?
    };
    let mut hashed = cfg.clone();
    hashed.out = PathBuf::from("-");
    let header = header("config", &format!("{}{spec_text}", hashed.to_text()));
    Ok(Experiment { cfg, dec, symbols, header })
}

impl Experiment {
    fn sweep_config(&self) -> Result<SweepConfig> {
        let cfg = &self.cfg;
        Ok(SweepConfig {
            energy: cfg.energy.clone(),
            z0: match &cfg.z0 {
                StartPoint::FromWitness => None,
                StartPoint::Explicit(z) => Some(z.clone()),
            },
            hbars: hbar_schedule(cfg.hbar_start, cfg.hbar_ratio, cfg.hbar_count)?,
            symbols: self.symbols.clone(),
            tail_tol: cfg.tail_tol,
            convex: cfg
                .convex_points
                .iter()
                .cloned()
                .zip(cfg.convex_weights.iter().copied())
                .collect(),
            separating: self.symbols.iter().map(|(_, a)| a.clone()).collect(),
        })
    }

    fn start_point(&self) -> Result<PhasePoint> {
        let witness = sigma_membership(&self.dec, &self.cfg.energy)?;
        Ok(match &self.cfg.z0 {
            StartPoint::FromWitness => witness.z0(),
            StartPoint::Explicit(z) => z.clone(),
        })
    }
}

/// Runs the sweep, writes its CSV files and returns the summary text.
pub fn run_sweep(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<String> {
    let exp = load_experiment(config_path, out, seed)?;
    let cfg = exp.sweep_config()?;
    let report = sweep(&exp.dec, &cfg)?;
    let comments = vec![exp.header.clone()];
    let dir = &exp.cfg.out;
    write(dir, "report.csv", &report.to_csv(&comments))?;
    write(dir, "targets.csv", &report.targets_csv(&comments))?;
    if let Some(state) = &report.final_state {
        write(dir, "state.csv", &state.to_csv(&comments)?)?;
    }
    let summary = format!("# {}\n{}", exp.header, report.summary());
    write(dir, "summary.txt", &summary)?;
    Ok(summary)
}

/// Writes the mode-`mode` Husimi marginal on a square grid and returns a
/// short report with its mass.
pub fn run_husimi(
    config_path: &Path,
    mode: usize,
    state_path: Option<&Path>,
    out: Option<PathBuf>,
) -> Result<String> {
    let exp = load_experiment(config_path, out, None)?;
    let state = match state_path {
        Some(path) => FockState::from_csv(&read(path)?)?,
        None => {
            let cfg = exp.sweep_config()?;
            let hbar = *cfg.hbars.last().expect("schedule has at least three entries");
            if cfg.convex.is_empty() {
                build_scar(&exp.dec, &exp.start_point()?, &cfg.energy, hbar, cfg.tail_tol)?.state
            } else {
                convex_scar(&exp.dec, &cfg.convex, &cfg.energy, hbar, cfg.tail_tol, &cfg.separating)?.state
            }
        }
    };
    if mode == 0 || mode > state.dim() {
        return Err(Error::Domain(format!("mode {mode} out of range 1..={}", state.dim())));
    }
    let rho = ReducedDensity::new(&state, mode - 1)?;
    let n = exp.cfg.husimi_points;
    let radius = exp.cfg.husimi_radius;
    let step = 2.0 * radius / (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| -radius + step * i as f64).collect();
    let grid: Vec<Vec<f64>> = axis
        .par_iter()
        .map(|&x| axis.iter().map(|&xi| rho.husimi(x, xi)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        &[exp.header.clone(), format!("mode = {mode}"), format!("hbar = {}", csvout::num(state.hbar()))],
        &["x", "xi", "value"].map(String::from),
    );
    let mut integral = 0.0;
    for (i, &x) in axis.iter().enumerate() {
        for (j, &xi) in axis.iter().enumerate() {
            let v = grid[i][j];
            let w = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            integral += w(i) * w(j) * v * step * step;
            table.row([csvout::num(x), csvout::num(xi), csvout::num(v)]);
        }
    }
    let path = write(&exp.cfg.out, &format!("husimi_mode{mode}.csv"), &table.finish())?;
    Ok(format!(
        "wrote {}\nmarginal mass = {}\ngrid integral = {}\n",
        path.display(),
        csvout::num(rho.trace()),
        csvout::num(integral)
    ))
}

/// Levels of the full oscillator in `[lo, hi]` as CSV.
pub fn levels(spec_path: &Path, hbar: f64, lo: f64, hi: f64) -> Result<String> {
    let (text, dec) = load_spec(spec_path)?;
    let levels = enumerate_window(&dec, hbar, lo, hi)?;
    Ok(levels_csv(&dec, &levels, hbar, &[header("spec", &text)]))
}

pub fn write_levels(dir: &Path, csv: &str) -> Result<PathBuf> {
    write(dir, "levels.csv", csv)
}
