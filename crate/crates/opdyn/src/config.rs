//! Run configuration: per-model defaults, optional TOML config files, and
//! command-line overrides, resolved into one [`HybridConfig`].
//!
//! The resolved config serializes under the same keys a config file accepts,
//! so the `[config]` table of any report can be fed back with `--config`.

use std::path::Path;

use clap::{Args, ValueEnum};
use opdyn_core::exact::MAX_EXACT_SITES;
use opdyn_core::{LocalOperator, Model, ModelSpec, TrainConfig, Truncation};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ising,
    Xxz,
}

impl From<ModelKind> for Model {
    fn from(k: ModelKind) -> Model {
        match k {
            ModelKind::Ising => Model::Ising,
            ModelKind::Xxz => Model::Xxz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Sz,
    Sx,
}

impl Observable {
    pub fn operator(self) -> LocalOperator {
        match self {
            Observable::Sz => LocalOperator::sz(),
            Observable::Sx => LocalOperator::sx(),
        }
    }
}

/// What the hybrid prediction is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// A full TEBD run over the whole interval with the same truncation.
    Tebd,
    /// Dense exact evolution; limited to small chains.
    Exact,
    None,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub model: ModelKind,
    #[serde(rename = "n")]
    pub n_sites: usize,
    pub j: f64,
    pub h: f64,
    pub delta_aniso: f64,
    pub delta: f64,
    #[serde(rename = "steps")]
    pub total_steps: usize,
    pub max_bond: usize,
    pub cutoff: f64,
    pub hard_cap: usize,
    pub window: usize,
    pub hidden: usize,
    pub train_pairs: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub target_mae: f64,
    pub min_lr: f64,
    pub lr_decay: f64,
    pub plateau_patience: usize,
    pub plateau_threshold: f64,
    pub reference: Reference,
    pub observable: Observable,
    pub seed_init: u64,
    pub seed_shuffle: u64,
}

impl HybridConfig {
    pub const DEFAULT_SEED_INIT: u64 = 0;
    pub const DEFAULT_SEED_SHUFFLE: u64 = 1;

    /// The quench setups of the two reference experiments.
    pub fn defaults(model: ModelKind) -> Self {
        let train = TrainConfig::default();
        let trunc = Truncation::default();
        let common = HybridConfig {
            model,
            n_sites: 12,
            j: 1.0,
            h: 1.0,
            delta_aniso: 0.0,
            delta: 0.05,
            total_steps: 500,
            max_bond: trunc.max_bond,
            cutoff: trunc.cutoff,
            hard_cap: trunc.hard_cap,
            window: 4,
            hidden: 32,
            train_pairs: 110,
            lr: train.learning_rate,
            max_epochs: train.max_epochs,
            target_mae: train.target_mae,
            min_lr: train.min_learning_rate,
            lr_decay: train.lr_decay,
            plateau_patience: train.plateau_patience,
            plateau_threshold: train.plateau_threshold,
            reference: Reference::Tebd,
            observable: Observable::Sz,
            seed_init: Self::DEFAULT_SEED_INIT,
            seed_shuffle: Self::DEFAULT_SEED_SHUFFLE,
        };
        match model {
            ModelKind::Ising => common,
            ModelKind::Xxz => HybridConfig {
                h: 0.5,
                delta_aniso: 0.5,
                delta: 0.01,
                total_steps: 2000,
                hidden: 64,
                train_pairs: 100,
                ..common
            },
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec { model: self.model.into(), n_sites: self.n_sites, j: self.j, h: self.h, delta_aniso: self.delta_aniso }
    }

    pub fn truncation(&self) -> Truncation {
        Truncation { max_bond: self.max_bond, cutoff: self.cutoff, hard_cap: self.hard_cap }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            max_epochs: self.max_epochs,
            target_mae: self.target_mae,
            seed: self.seed_shuffle,
            plateau_patience: self.plateau_patience,
            plateau_threshold: self.plateau_threshold,
            lr_decay: self.lr_decay,
            min_learning_rate: self.min_lr,
        }
    }

    /// Number of TEBD samples, `t = 0` included, that feed the regressor.
    pub fn generated_points(&self) -> usize {
        self.train_pairs + self.window
    }

    pub fn end_time(&self) -> f64 {
        self.total_steps as f64 * self.delta
    }

    /// Checks what a plain simulation over the whole interval needs.
    pub fn validate_simulation(&self) -> Result<()> {
        self.model_spec().validate()?;
        self.truncation().validate()?;
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.total_steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks everything a hybrid run needs.
    pub fn validate(&self) -> Result<()> {
        self.validate_simulation()?;
        self.train_config().validate()?;
        if self.window == 0 || self.hidden == 0 || self.train_pairs == 0 {
            return Err(Error::Config("window, hidden and train_pairs must be at least 1".into()));
        }
        if self.generated_points() > self.total_steps + 1 {
            return Err(Error::Config(format!(
                "train_pairs + window = {} exceeds the {} samples of a {}-step run",
                self.generated_points(),
                self.total_steps + 1,
                self.total_steps
            )));
        }
        if self.reference == Reference::Exact && self.n_sites > MAX_EXACT_SITES {
            return Err(Error::Config(format!("exact reference supports at most {MAX_EXACT_SITES} sites")));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Partially specified settings. Every field is optional so command-line
/// flags and config files can be layered over the per-model defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Number of sites.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Coupling J.
    #[arg(long)]
    pub j: Option<f64>,
    /// Transverse field h.
    #[arg(long = "h", allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// XXZ anisotropy.
    #[arg(long, allow_negative_numbers = true)]
    pub delta_aniso: Option<f64>,
    /// Time step.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of time steps over the whole interval.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub max_bond: Option<usize>,
    /// Relative discarded weight below which singular values are dropped.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(skip)]
    pub hard_cap: Option<usize>,
    /// Regressor input window p.
    #[arg(long)]
    pub window: Option<usize>,
    /// Hidden width m.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub train_pairs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub target_mae: Option<f64>,
    #[arg(skip)]
    pub min_lr: Option<f64>,
    #[arg(skip)]
    pub lr_decay: Option<f64>,
    #[arg(skip)]
    pub plateau_patience: Option<usize>,
    #[arg(skip)]
    pub plateau_threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,
    #[arg(long, value_enum)]
    pub observable: Option<Observable>,
    #[arg(long)]
    pub seed_init: Option<u64>,
    #[arg(long)]
    pub seed_shuffle: Option<u64>,
    /// Chain lengths for `bench`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

impl Settings {
    /// Reads a config file. A `[config]` table, as found in run reports, takes
    /// precedence over top-level keys.
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let table = match table.remove("config") {
            Some(toml::Value::Table(inner)) => inner,
            Some(_) => return Err("'config' must be a table".into()),
            None => table,
        };
        Settings::deserialize(toml::Value::Table(table)).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Settings::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over `lower`.
    pub fn or(self, lower: Settings) -> Settings {
        Settings {
            model: self.model.or(lower.model),
            n: self.n.or(lower.n),
            j: self.j.or(lower.j),
            h: self.h.or(lower.h),
            delta_aniso: self.delta_aniso.or(lower.delta_aniso),
            delta: self.delta.or(lower.delta),
            steps: self.steps.or(lower.steps),
            max_bond: self.max_bond.or(lower.max_bond),
            cutoff: self.cutoff.or(lower.cutoff),
            hard_cap: self.hard_cap.or(lower.hard_cap),
            window: self.window.or(lower.window),
            hidden: self.hidden.or(lower.hidden),
            train_pairs: self.train_pairs.or(lower.train_pairs),
            lr: self.lr.or(lower.lr),
            max_epochs: self.max_epochs.or(lower.max_epochs),
            target_mae: self.target_mae.or(lower.target_mae),
            min_lr: self.min_lr.or(lower.min_lr),
            lr_decay: self.lr_decay.or(lower.lr_decay),
            plateau_patience: self.plateau_patience.or(lower.plateau_patience),
            plateau_threshold: self.plateau_threshold.or(lower.plateau_threshold),
            reference: self.reference.or(lower.reference),
            observable: self.observable.or(lower.observable),
            seed_init: self.seed_init.or(lower.seed_init),
            seed_shuffle: self.seed_shuffle.or(lower.seed_shuffle),
            sizes: self.sizes.or(lower.sizes),
        }
    }

    /// Fills unset fields from the defaults of the chosen model.
    pub fn resolve(&self) -> HybridConfig {
        let d = HybridConfig::defaults(self.model.unwrap_or(ModelKind::Ising));
        HybridConfig {
            model: d.model,
            n_sites: self.n.unwrap_or(d.n_sites),
            j: self.j.unwrap_or(d.j),
            h: self.h.unwrap_or(d.h),
            delta_aniso: self.delta_aniso.unwrap_or(d.delta_aniso),
            delta: self.delta.unwrap_or(d.delta),
            total_steps: self.steps.unwrap_or(d.total_steps),
            max_bond: self.max_bond.unwrap_or(d.max_bond),
            cutoff: self.cutoff.unwrap_or(d.cutoff),
            hard_cap: self.hard_cap.unwrap_or(d.hard_cap),
            window: self.window.unwrap_or(d.window),
            hidden: self.hidden.unwrap_or(d.hidden),
            train_pairs: self.train_pairs.unwrap_or(d.train_pairs),
            lr: self.lr.unwrap_or(d.lr),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            target_mae: self.target_mae.unwrap_or(d.target_mae),
            min_lr: self.min_lr.unwrap_or(d.min_lr),
            lr_decay: self.lr_decay.unwrap_or(d.lr_decay),
            plateau_patience: self.plateau_patience.unwrap_or(d.plateau_patience),
            plateau_threshold: self.plateau_threshold.unwrap_or(d.plateau_threshold),
            reference: self.reference.unwrap_or(d.reference),
            observable: self.observable.unwrap_or(d.observable),
            seed_init: self.seed_init.unwrap_or(d.seed_init),
            seed_shuffle: self.seed_shuffle.unwrap_or(d.seed_shuffle),
        }
    }
}
