//! Output files. Every file is written to a temporary name in the target
//! directory and renamed into place, so readers never see a partial file.
//!
//! Series CSVs have the header `time,value` and 17 significant digits, enough
//! to round-trip every `f64`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use opdyn_core::{EvolveStats, TimeSeries};
use serde::Serialize;

use crate::config::HybridConfig;
use crate::error::{Error, Result};
use crate::pipeline::{BenchRow, Failure, RunReport, Simulation};

pub const SERIES_REF: &str = "series_ref.csv";
pub const SERIES_PRED: &str = "series_pred.csv";
pub const EPSILON: &str = "epsilon.csv";
pub const BENCH: &str = "bench.csv";
pub const SERIES: &str = "series.csv";
pub const REPORT: &str = "report.toml";
pub const MODEL: &str = "model.ckpt";

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(Error::io(&dir))?;
    tmp.write_all(contents).map_err(Error::io(path))?;
    tmp.as_file().sync_all().map_err(Error::io(path))?;
    tmp.persist(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let done = w.write_record(header).and_then(|_| fill(&mut w)).and_then(|_| w.flush().map_err(csv::Error::from));
    done.map_err(|e| Error::Format { path: PathBuf::new(), message: e.to_string() })?;
    w.into_inner().map_err(|e| Error::Format { path: PathBuf::new(), message: e.to_string() })
}

pub fn write_series_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let bytes = csv_bytes(&["time", "value"], |w| {
        for (t, v) in series.times.iter().zip(&series.values) {
            w.write_record([fmt_f64(*t), fmt_f64(*v)])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let bad = |message: String| Error::Format { path: path.to_path_buf(), message };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header != vec!["time", "value"] {
        return Err(bad(format!("expected header time,value, found {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| rec[i].trim().parse::<f64>().map_err(|e| bad(format!("line {:?}: {e}", rec.position().map(|p| p.line()))));
        times.push(num(0)?);
        values.push(num(1)?);
    }
    TimeSeries::new(times, values).map_err(|e| bad(e.to_string()))
}

pub const BENCH_HEADER: [&str; 8] =
    ["n_sites", "train_pairs", "generation_s", "train_predict_s", "full_tebd_s", "train_epochs", "mean_epsilon", "status"];

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let bytes = csv_bytes(&BENCH_HEADER, |w| {
        for r in rows {
            w.write_record([
                r.n_sites.to_string(),
                r.train_pairs.to_string(),
                fmt_f64(r.generation_s),
                fmt_f64(r.train_predict_s),
                fmt_f64(r.full_tebd_s),
                r.train_epochs.map(|e| e.to_string()).unwrap_or_default(),
                r.mean_epsilon.map(fmt_f64).unwrap_or_default(),
                r.failure.as_ref().map_or_else(|| "ok".to_string(), |f| format!("failed:{}", f.kind)),
            ])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// The `[config]` table of a report: the resolved config, plus the sweep
/// sizes for `bench`.
#[derive(Serialize)]
struct ConfigEcho<'a> {
    #[serde(flatten)]
    cfg: &'a HybridConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    sizes: Option<&'a [usize]>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Results {
    pub verb: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generation_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_epsilon_prediction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_start_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_train_mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affine_coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affine_intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix_consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_weight_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_weight_max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_bond_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_truncation_weight_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_max_bond_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_rows: Option<usize>,
}

impl Results {
    pub fn new(verb: &str) -> Self {
        Results { verb: verb.to_string(), status: "ok".to_string(), ..Results::default() }
    }

    pub fn fail(&mut self, f: &Failure) {
        self.status = "failed".to_string();
        self.error_kind = Some(f.kind.clone());
        self.error = Some(f.message.clone());
    }

    fn truncation(&mut self, stats: Option<&EvolveStats>) {
        if let Some(s) = stats {
            self.truncation_weight_total = Some(s.cumulative_truncation_weight);
            self.truncation_weight_max_step = Some(s.max_step_truncation_weight);
            self.max_bond_dim = Some(s.max_bond_dim);
        }
    }

    pub fn from_simulation(verb: &str, sim: &Simulation) -> Self {
        let mut r = Results::new(verb);
        r.simulation_seconds = Some(sim.seconds);
        r.truncation(sim.truncation.as_ref());
        r
    }

    pub fn from_run(report: &RunReport) -> Self {
        let mut r = Results::new("hybrid");
        if let Some(f) = &report.failure {
            r.fail(f);
        }
        r.generation_seconds = Some(report.generation_seconds);
        r.training_seconds = Some(report.training_seconds);
        r.prediction_seconds = Some(report.prediction_seconds);
        r.reference_seconds = Some(report.reference_seconds);
        r.mean_epsilon = report.mean_epsilon;
        r.mean_epsilon_prediction = report.mean_epsilon_prediction;
        r.max_epsilon = report.max_epsilon;
        r.prediction_start_index = Some(report.prediction_start());
        if let Some(t) = &report.training {
            r.train_epochs = Some(t.epochs);
            r.final_train_mae = Some(t.final_mae);
            r.final_learning_rate = Some(t.final_learning_rate);
        }
        if let Some(m) = &report.model {
            let (w, b) = m.collapse_to_affine();
            r.affine_coefficients = Some(w);
            r.affine_intercept = Some(b);
        }
        r.prefix_consistent = report.prefix_consistent;
        r.truncation(report.generation_truncation.as_ref());
        if let Some(s) = &report.reference_truncation {
            r.reference_truncation_weight_total = Some(s.cumulative_truncation_weight);
            r.reference_max_bond_dim = Some(s.max_bond_dim);
        }
        r
    }

    pub fn from_bench(rows: &[BenchRow]) -> Self {
        let mut r = Results::new("bench");
        let failed = rows.iter().filter(|row| row.failure.is_some()).count();
        r.rows = Some(rows.len());
        r.failed_rows = Some(failed);
        r
    }
}

pub fn report_toml(cfg: &HybridConfig, sizes: Option<&[usize]>, results: &Results) -> String {
    #[derive(Serialize)]
    struct File<'a> {
        config: ConfigEcho<'a>,
        results: &'a Results,
    }
    toml::to_string(&File { config: ConfigEcho { cfg, sizes }, results }).expect("report serializes")
}

pub fn write_report(path: &Path, cfg: &HybridConfig, sizes: Option<&[usize]>, results: &Results) -> Result<()> {
    write_atomic(path, report_toml(cfg, sizes, results).as_bytes())
}

/// Writes the CSVs a hybrid run produced, the model checkpoint, and the report.
pub fn write_run(dir: &Path, report: &RunReport) -> Result<()> {
    ensure_dir(dir)?;
    if let Some(s) = &report.reference {
        write_series_csv(&dir.join(SERIES_REF), s)?;
    }
    if let Some(s) = &report.predicted {
        write_series_csv(&dir.join(SERIES_PRED), s)?;
    }
    if let Some(s) = &report.epsilon {
        write_series_csv(&dir.join(EPSILON), s)?;
    }
    if let Some(m) = &report.model {
        crate::checkpoint::save(&dir.join(MODEL), m)?;
    }
    write_report(&dir.join(REPORT), &report.config, None, &Results::from_run(report))
}
