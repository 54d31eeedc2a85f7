//! End-to-end hybrid runs: a short TEBD prefix trains the regressor, which
//! then extrapolates the observable over the rest of the interval.
//!
//! Sample `k` of every series sits at `t = k·δ`. The first `window` samples
//! only ever serve as inputs, so the hybrid series starts at index `window`:
//! one-step outputs on the training windows up to `train_pairs + window - 1`,
//! then the closed-loop rollout up to `total_steps`.

use std::time::Instant;

use opdyn_core::exact::{exact_evolve_record, DenseState};
use opdyn_core::regressor::{build_windows, predict_autoregressive, train_sgd};
use opdyn_core::tebd::{build_trotter_schedule, evolve_record};
use opdyn_core::{build_bond_terms, EvolveStats, Mlp, MpsState, TimeSeries};

use crate::config::{HybridConfig, Reference};
use crate::error::{Error, Result};

const GRID_TOL: f64 = 1e-9;

/// A series produced by one direct simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub series: TimeSeries,
    /// `None` for dense exact evolution.
    pub truncation: Option<EvolveStats>,
    pub seconds: f64,
}

/// TEBD from the all-up state for `n_steps` steps.
pub fn simulate_tebd(cfg: &HybridConfig, n_steps: usize) -> Result<Simulation> {
    let start = Instant::now();
    let terms = build_bond_terms(&cfg.model_spec())?;
    let sched = build_trotter_schedule(&terms, cfg.delta)?;
    let mut state = MpsState::all_up(cfg.n_sites)?;
    let (series, stats) = evolve_record(&mut state, &sched, n_steps, &cfg.observable.operator(), &cfg.truncation())?;
    Ok(Simulation { series, truncation: Some(stats), seconds: start.elapsed().as_secs_f64() })
}

/// Dense exact evolution from the all-up state for `n_steps` steps.
pub fn simulate_exact(cfg: &HybridConfig, n_steps: usize) -> Result<Simulation> {
    let start = Instant::now();
    let initial = DenseState::all_up(cfg.n_sites)?;
    let series = exact_evolve_record(&cfg.model_spec(), &initial, cfg.delta, n_steps, &cfg.observable.operator())?;
    Ok(Simulation { series, truncation: None, seconds: start.elapsed().as_secs_f64() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub epsilon: TimeSeries,
    pub mean_abs: f64,
    pub max_abs: f64,
}

/// Pointwise `|a - b|` of two series on the same grid.
pub fn compare_series(a: &TimeSeries, b: &TimeSeries) -> Result<Comparison> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Core(opdyn_core::Error::InvalidInput(format!("cannot compare series of length {} and {}", a.len(), b.len()))));
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > GRID_TOL * ta.abs().max(1.0) {
            return Err(Error::Core(opdyn_core::Error::InvalidInput(format!("time grids differ at t = {ta} vs {tb}"))));
        }
    }
    let values: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    let mean_abs = values.iter().sum::<f64>() / values.len() as f64;
    let max_abs = values.iter().copied().fold(0.0, f64::max);
    Ok(Comparison { epsilon: TimeSeries { times: a.times.clone(), values }, mean_abs, max_abs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for Failure {
    fn from(e: &Error) -> Self {
        Failure { kind: e.kind().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_mae: f64,
    pub final_learning_rate: f64,
}

/// Everything a hybrid run produced. Stages after a failure stay empty.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: HybridConfig,
    pub failure: Option<Failure>,
    pub generation_seconds: f64,
    pub training_seconds: f64,
    pub prediction_seconds: f64,
    pub reference_seconds: f64,
    /// The TEBD prefix, `train_pairs + window` samples.
    pub generated: Option<TimeSeries>,
    pub generation_truncation: Option<EvolveStats>,
    pub training: Option<TrainSummary>,
    pub model: Option<Mlp>,
    /// Hybrid values from index `window` to `total_steps`.
    pub predicted: Option<TimeSeries>,
    pub reference: Option<TimeSeries>,
    pub reference_truncation: Option<EvolveStats>,
    /// Whether the generated prefix equals the start of a TEBD reference bit for bit.
    pub prefix_consistent: Option<bool>,
    /// `|reference - predicted|` over the whole hybrid series.
    pub epsilon: Option<TimeSeries>,
    pub mean_epsilon: Option<f64>,
    pub max_epsilon: Option<f64>,
    /// Mean of `epsilon` over the closed-loop part only.
    pub mean_epsilon_prediction: Option<f64>,
}

impl RunReport {
    fn empty(config: HybridConfig) -> Self {
        RunReport {
            config,
            failure: None,
            generation_seconds: 0.0,
            training_seconds: 0.0,
            prediction_seconds: 0.0,
            reference_seconds: 0.0,
            generated: None,
            generation_truncation: None,
            training: None,
            model: None,
            predicted: None,
            reference: None,
            reference_truncation: None,
            prefix_consistent: None,
            epsilon: None,
            mean_epsilon: None,
            max_epsilon: None,
            mean_epsilon_prediction: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// Index of the first closed-loop sample.
    pub fn prediction_start(&self) -> usize {
        self.config.generated_points()
    }
}

/// Runs generation, training, prediction and the optional reference.
///
/// Invalid configurations are returned as errors. Failures while computing
/// come back as a report with [`RunReport::failure`] set and whatever the
/// earlier stages produced.
pub fn hybrid_run(cfg: &HybridConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut report = RunReport::empty(cfg.clone());
    if let Err(e) = run_stages(cfg, &mut report) {
        report.failure = Some(Failure::from(&e));
    }
    if let Err(e) = run_reference(cfg, &mut report) {
        report.failure.get_or_insert_with(|| Failure::from(&e));
    }
    Ok(report)
}

fn run_stages(cfg: &HybridConfig, report: &mut RunReport) -> Result<()> {
    let p = cfg.window;
    let gen = simulate_tebd(cfg, cfg.generated_points() - 1)?;
    report.generation_seconds = gen.seconds;
    report.generation_truncation = gen.truncation;
    let generated = report.generated.insert(gen.series);

    let start = Instant::now();
    let data = build_windows(generated, p, Some(cfg.train_pairs))?;
    let mut mlp = Mlp::init(p, cfg.hidden, cfg.seed_init)?;
    let trained = train_sgd(&mut mlp, &data, &cfg.train_config());
    report.training_seconds = start.elapsed().as_secs_f64();
    let trained = trained?;
    report.training = Some(TrainSummary {
        epochs: trained.epochs_run,
        final_mae: trained.final_train_mae,
        final_learning_rate: trained.final_learning_rate,
    });

    let start = Instant::now();
    let mut values = Vec::with_capacity(cfg.total_steps + 1 - p);
    for x in &data.inputs {
        values.push(mlp.forward(x)?);
    }
    let seed_window = &generated.values[generated.len() - p..];
    let rollout = predict_autoregressive(&mlp, seed_window, cfg.total_steps + 1 - generated.len());
    report.prediction_seconds = start.elapsed().as_secs_f64();
    report.model = Some(mlp);
    values.extend(rollout?);
    report.predicted = Some(TimeSeries::uniform(p as f64 * cfg.delta, cfg.delta, values));
    Ok(())
}

fn run_reference(cfg: &HybridConfig, report: &mut RunReport) -> Result<()> {
    let sim = match cfg.reference {
        Reference::None => return Ok(()),
        Reference::Tebd => simulate_tebd(cfg, cfg.total_steps)?,
        Reference::Exact => simulate_exact(cfg, cfg.total_steps)?,
    };
    report.reference_seconds = sim.seconds;
    report.reference_truncation = sim.truncation;
    if let (Reference::Tebd, Some(generated)) = (cfg.reference, &report.generated) {
        let prefix = &sim.series.values[..generated.len()];
        report.prefix_consistent = Some(prefix.iter().zip(&generated.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    if let Some(predicted) = &report.predicted {
        let compared = sim.series.slice(cfg.window..sim.series.len());
        let full = compare_series(&compared, predicted)?;
        let split = cfg.train_pairs;
        let tail = &full.epsilon.values[split..];
        report.mean_epsilon_prediction = Some(tail.iter().sum::<f64>() / tail.len() as f64);
        report.mean_epsilon = Some(full.mean_abs);
        report.max_epsilon = Some(full.max_abs);
        report.epsilon = Some(full.epsilon);
    }
    report.reference = Some(sim.series);
    Ok(())
}

/// One line of the scaling table.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n_sites: usize,
    pub train_pairs: usize,
    pub generation_s: f64,
    pub train_predict_s: f64,
    pub full_tebd_s: f64,
    pub train_epochs: Option<usize>,
    pub mean_epsilon: Option<f64>,
    pub failure: Option<Failure>,
}

/// Hybrid run plus full TEBD baseline for every size, one after the other.
/// A failing size is recorded in its row and the sweep continues.
pub fn bench_scaling(sizes: &[usize], base: &HybridConfig, train_pairs: &[usize]) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() || sizes.len() != train_pairs.len() {
        return Err(Error::Config(format!("{} sizes but {} train_pairs entries", sizes.len(), train_pairs.len())));
    }
    if let Some(n) = sizes.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!("bench sizes must be at least 2, got {n}")));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for (&n_sites, &pairs) in sizes.iter().zip(train_pairs) {
        let cfg = HybridConfig { n_sites, train_pairs: pairs, reference: Reference::Tebd, ..base.clone() };
        let row = match hybrid_run(&cfg) {
            Ok(r) => BenchRow {
                n_sites,
                train_pairs: pairs,
                generation_s: r.generation_seconds,
                train_predict_s: r.training_seconds + r.prediction_seconds,
                full_tebd_s: r.reference_seconds,
                train_epochs: r.training.as_ref().map(|t| t.epochs),
                mean_epsilon: r.mean_epsilon,
                failure: r.failure,
            },
            Err(e) => BenchRow {
                n_sites,
                train_pairs: pairs,
                generation_s: f64::NAN,
                train_predict_s: f64::NAN,
                full_tebd_s: f64::NAN,
                train_epochs: None,
                mean_epsilon: None,
                failure: Some(Failure::from(&e)),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}
