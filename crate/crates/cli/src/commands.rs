//! The four commands and their file outputs.

use crate::config::{ConfigError, RunConfig};
use phonon_stirap::model::{Severity, ValidationReport};
use phonon_stirap::pipeline::{simulate, Metrics};
use phonon_stirap::spectral::three_level_dark_state;
use phonon_stirap::sweep::{best_point, run_sweep, SweepAxis};
use phonon_stirap::{Error, C64, MODES};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{code}: {0}", code = .0.code())]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Usage(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{code}: {0}", code = .0.code())]
    Numerical(Error),

    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Process exit status: 2 for configuration or usage problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::GridTooLarge { .. } | Error::ZeroFields | Error::ZeroDetuning(_) => {
                CliError::Usage(format!("{}: {e}", e.code()))
            }
            other => CliError::Numerical(other),
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), source: e.into() }
}

#[derive(Debug, Serialize)]
struct FindingRecord<'a> {
    severity: &'static str,
    code: &'a str,
    message: &'a str,
}

fn findings(report: &ValidationReport) -> Vec<FindingRecord<'_>> {
    report
        .findings
        .iter()
        .map(|f| FindingRecord {
            severity: match f.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            },
            code: f.code,
            message: &f.message,
        })
        .collect()
}

/// Validate the scenario, honouring strict mode.
fn checked(cfg: &RunConfig, strict: bool) -> Result<ValidationReport, CliError> {
    let report = cfg.scenario.validate();
    if !report.passes(strict || cfg.strict) {
        let list: Vec<String> = report.findings.iter().map(|f| format!("{} ({})", f.code, f.message)).collect();
        return Err(CliError::Validation(list.join("; ")));
    }
    Ok(report)
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

/// Shortest decimal that reads back to the same value.
fn num(v: f64) -> String {
    v.to_string()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct MetricsRecord {
    eta: f64,
    #[serde(rename = "peak_n_aM")]
    peak_n_am: f64,
    min_gap: Option<f64>,
    integrated_shift: Option<f64>,
}

impl From<&Metrics> for MetricsRecord {
    fn from(m: &Metrics) -> Self {
        MetricsRecord { eta: m.eta, peak_n_am: m.peak_n_am, min_gap: m.min_gap, integrated_shift: m.integrated_shift }
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    #[serde(flatten)]
    metrics: MetricsRecord,
    runtime: f64,
    validation: Vec<FindingRecord<'a>>,
}

/// Integrate the occupancies; writes `occupancies.csv` and `summary.json`.
pub fn cmd_simulate(cfg: &RunConfig, strict: bool) -> Result<Metrics, CliError> {
    let report = checked(cfg, strict)?;
    let started = Instant::now();
    let sim = simulate(&cfg.scenario)?;
    let runtime = started.elapsed().as_secs_f64();

    prepare_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("occupancies.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    w.write_record(["t", "n_aL", "n_aM", "n_aR", "n_b1", "n_b2"]).map_err(csv_error(&path))?;
    for (t, occ) in sim.moments.times.iter().zip(&sim.moments.occupancies) {
        let mut row = vec![num(*t)];
        row.extend(occ.iter().map(|&v| num(v)));
        w.write_record(&row).map_err(csv_error(&path))?;
    }
    w.flush().map_err(io_error(&path))?;

    let summary = Summary { metrics: (&sim.metrics).into(), runtime, validation: findings(&report) };
    let path = cfg.out_dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary).expect("plain data") + "\n").map_err(io_error(&path))?;
    Ok(sim.metrics)
}

/// Branch-tracked spectrum; writes `spectrum.csv`.
pub fn cmd_spectrum(cfg: &RunConfig, strict: bool) -> Result<usize, CliError> {
    checked(cfg, strict)?;
    let mft = cfg.scenario.mean_field()?;
    let spectrum = cfg.scenario.spectrum(&mft)?;

    prepare_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("spectrum.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    let mut header = vec!["t".to_string()];
    for k in 1..=MODES {
        header.push(format!("re_l{k}"));
        header.push(format!("im_l{k}"));
    }
    header.extend(["gap", "re_shift", "im_shift", "g1aL", "g2aR"].map(String::from));
    w.write_record(&header).map_err(csv_error(&path))?;
    for (i, snap) in spectrum.snapshots.iter().enumerate() {
        let mut row = vec![num(snap.time)];
        for z in spectrum.labelled(i) {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        row.push(num(snap.gap));
        let shift = snap.decay_shift.unwrap_or(C64::new(f64::NAN, f64::NAN));
        row.push(num(shift.re));
        row.push(num(shift.im));
        let (l, r) = spectrum.couplings[i];
        row.push(num(l.re));
        row.push(num(r.re));
        w.write_record(&row).map_err(csv_error(&path))?;
    }
    w.flush().map_err(io_error(&path))?;
    Ok(spectrum.ambiguous_points())
}

#[derive(Debug, Serialize)]
struct BestRecord {
    index: usize,
    parameters: serde_json::Map<String, serde_json::Value>,
    #[serde(flatten)]
    metrics: MetricsRecord,
}

/// Grid search; writes `sweep.csv` and `best.json`. Returns the number of
/// failed cells.
pub fn cmd_sweep(cfg: &RunConfig, axes: &[SweepAxis], strict: bool) -> Result<usize, CliError> {
    if axes.is_empty() {
        return Err(CliError::Usage("sweep needs at least one --axis name=v1,v2,...".into()));
    }
    checked(cfg, strict)?;
    let result = run_sweep(&cfg.scenario, axes, cfg.max_cells)?;

    prepare_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    let mut header: Vec<String> = axes.iter().map(|a| a.param.name().to_string()).collect();
    header.extend(["eta", "peak_n_aM", "min_gap", "integrated_shift", "status"].map(String::from));
    w.write_record(&header).map_err(csv_error(&path))?;
    for cell in &result.cells {
        let mut row: Vec<String> = cell.values.iter().map(|&v| num(v)).collect();
        match &cell.outcome {
            Ok(m) => {
                row.extend([num(m.eta), num(m.peak_n_am), opt_num(m.min_gap), opt_num(m.integrated_shift)]);
                row.push("ok".into());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 4));
                row.push(e.code().into());
            }
        }
        w.write_record(&row).map_err(csv_error(&path))?;
    }
    w.flush().map_err(io_error(&path))?;

    let best = best_point(&result)?;
    let parameters = axes
        .iter()
        .zip(&best.values)
        .map(|(a, &v)| (a.param.name().to_string(), serde_json::json!(v)))
        .collect();
    let record = BestRecord {
        index: best.index,
        parameters,
        metrics: best.metrics().expect("best cell succeeded").into(),
    };
    let path = cfg.out_dir.join("best.json");
    fs::write(&path, serde_json::to_string_pretty(&record).expect("plain data") + "\n").map_err(io_error(&path))?;
    Ok(result.failed())
}

#[derive(Debug, Serialize)]
pub struct ThreeLevelRecord {
    pub eigenvalue: f64,
    pub state: [f64; 3],
}

/// Dark eigenpair of the three-level reference system, as JSON.
pub fn cmd_stirap3(omega_p: f64, omega_s: f64, delta_p: f64, delta_s: f64) -> Result<String, CliError> {
    let s = three_level_dark_state(omega_p, omega_s, delta_p, delta_s)?;
    let record = ThreeLevelRecord { eigenvalue: s.eigenvalue, state: s.state };
    Ok(serde_json::to_string(&record).expect("plain data"))
}

/// Read and parse a configuration file; no file means all defaults.
pub fn load_config(path: Option<&Path>, out: Option<&Path>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            crate::config::parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = out {
        cfg.out_dir = dir.to_path_buf();
    }
    Ok(cfg)
}
