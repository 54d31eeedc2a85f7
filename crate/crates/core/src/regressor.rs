//! Sliding-window regression with a one-hidden-layer linear perceptron.
//!
//! A window of `p` consecutive samples predicts the next sample. Every layer
//! uses the identity activation, so a trained network is an affine map of the
//! window (see [`Mlp::collapse_to_affine`]); it is trained by stochastic
//! subgradient descent on the mean absolute error and then rolled forward on
//! its own outputs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Training pairs `inputs[i] = x[i..i+p]`, `labels[i] = x[i+p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub window_size: usize,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub source_delta: f64,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Windows over raw samples; see [`build_windows`].
    pub fn from_values(values: &[f64], window_size: usize, limit: Option<usize>, source_delta: f64) -> Result<Self> {
        if window_size == 0 {
            return Err(Error::invalid("window size must be at least 1"));
        }
        if values.len() < window_size + 1 {
            return Err(Error::invalid(format!(
                "series of length {} is too short for window {window_size}",
                values.len()
            )));
        }
        let available = values.len() - window_size;
        let count = limit.map_or(available, |l| l.min(available));
        let inputs = (0..count).map(|i| values[i..i + window_size].to_vec()).collect();
        let labels = (0..count).map(|i| values[i + window_size]).collect();
        Ok(WindowSet { window_size, inputs, labels, source_delta })
    }
}

/// All `len - p` windows of `series` in start order, optionally keeping only the first `limit`.
pub fn build_windows(series: &TimeSeries, window_size: usize, limit: Option<usize>) -> Result<WindowSet> {
    WindowSet::from_values(&series.values, window_size, limit, series.spacing().unwrap_or(0.0))
}

/// `p → m → 1` perceptron with identity activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    window: usize,
    hidden: usize,
    seed: u64,
    /// `hidden × window`, row-major.
    hidden_weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: f64,
}

impl Mlp {
    /// Weights uniform in `±1/√fan_in`, biases zero.
    pub fn init(window: usize, hidden: usize, seed: u64) -> Result<Self> {
        if window == 0 || hidden == 0 {
            return Err(Error::invalid("window and hidden sizes must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hs = 1.0 / libm::sqrt(window as f64);
        let os = 1.0 / libm::sqrt(hidden as f64);
        let hidden_weights = (0..hidden * window).map(|_| rng.random_range(-hs..=hs)).collect();
        let output_weights = (0..hidden).map(|_| rng.random_range(-os..=os)).collect();
        Ok(Mlp {
            window,
            hidden,
            seed,
            hidden_weights,
            hidden_bias: vec![0.0; hidden],
            output_weights,
            output_bias: 0.0,
        })
    }

    /// Assembles a network from explicit parameters.
    pub fn from_parts(
        window: usize,
        hidden: usize,
        seed: u64,
        hidden_weights: Vec<f64>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    ) -> Result<Self> {
        if window == 0 || hidden == 0 {
            return Err(Error::invalid("window and hidden sizes must be at least 1"));
        }
        if hidden_weights.len() != hidden * window || hidden_bias.len() != hidden || output_weights.len() != hidden {
            return Err(Error::invalid("parameter shapes do not match the layer sizes"));
        }
        let mlp = Mlp { window, hidden, seed, hidden_weights, hidden_bias, output_weights, output_bias };
        if !mlp.is_finite() {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(mlp)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.hidden_weights
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn output_bias(&self) -> f64 {
        self.output_bias
    }

    pub fn n_params(&self) -> usize {
        self.hidden * self.window + 2 * self.hidden + 1
    }

    /// Flat parameter vector: hidden weights, hidden bias, output weights, output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(&self.hidden_weights);
        out.extend_from_slice(&self.hidden_bias);
        out.extend_from_slice(&self.output_weights);
        out.push(self.output_bias);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::invalid(format!("expected {} parameters, got {}", self.n_params(), params.len())));
        }
        let (hw, rest) = params.split_at(self.hidden * self.window);
        let (hb, rest) = rest.split_at(self.hidden);
        let (ow, ob) = rest.split_at(self.hidden);
        self.hidden_weights.copy_from_slice(hw);
        self.hidden_bias.copy_from_slice(hb);
        self.output_weights.copy_from_slice(ow);
        self.output_bias = ob[0];
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.window {
            return Err(Error::invalid(format!("input has length {}, network expects {}", x.len(), self.window)));
        }
        Ok(())
    }

    fn hidden_row(&self, j: usize) -> &[f64] {
        &self.hidden_weights[j * self.window..(j + 1) * self.window]
    }

    fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let mut y = self.output_bias;
        for j in 0..self.hidden {
            let h = self.hidden_bias[j] + dot(self.hidden_row(j), x);
            y += self.output_weights[j] * h;
        }
        y
    }

    /// `w_out · (W x + b) + b_out`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    /// The affine map `x ↦ coefficients · x + intercept` this network computes.
    pub fn collapse_to_affine(&self) -> (Vec<f64>, f64) {
        let mut coefficients = vec![0.0; self.window];
        let mut intercept = self.output_bias;
        for j in 0..self.hidden {
            let v = self.output_weights[j];
            for (c, w) in coefficients.iter_mut().zip(self.hidden_row(j)) {
                *c += v * w;
            }
            intercept += v * self.hidden_bias[j];
        }
        (coefficients, intercept)
    }

    /// Mean absolute error over a window set.
    pub fn mae(&self, data: &WindowSet) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::invalid("empty window set"));
        }
        if data.window_size != self.window {
            return Err(Error::invalid("window size of data and network differ"));
        }
        let total: f64 = data.inputs.iter().zip(&data.labels).map(|(x, y)| (self.forward_unchecked(x) - y).abs()).sum();
        Ok(total / data.len() as f64)
    }

    /// Adds `scale · ∂|f(x) - y|/∂θ` into `grad` (flat layout of [`Self::params`]).
    /// The subgradient at `f(x) = y` is taken as zero.
    fn accumulate_abs_gradient(&self, x: &[f64], y: f64, scale: f64, grad: &mut [f64]) {
        let err = self.forward_unchecked(x) - y;
        let g = scale * sign(err);
        if g == 0.0 {
            return;
        }
        let (p, m) = (self.window, self.hidden);
        let (gw, rest) = grad.split_at_mut(m * p);
        let (gb, rest) = rest.split_at_mut(m);
        let (gv, gc) = rest.split_at_mut(m);
        for j in 0..m {
            let v = self.output_weights[j];
            let h = self.hidden_bias[j] + dot(self.hidden_row(j), x);
            gv[j] += g * h;
            gb[j] += g * v;
            for k in 0..p {
                gw[j * p + k] += g * v * x[k];
            }
        }
        gc[0] += g;
    }

    /// Subgradient of the mean absolute error over `data`.
    pub fn mae_gradient(&self, data: &WindowSet) -> Result<Vec<f64>> {
        self.mae(data)?;
        let mut grad = vec![0.0; self.n_params()];
        let scale = 1.0 / data.len() as f64;
        for (x, y) in data.inputs.iter().zip(&data.labels) {
            self.accumulate_abs_gradient(x, *y, scale, &mut grad);
        }
        Ok(grad)
    }

    /// One subgradient step on a single example, in place.
    fn sgd_update(&mut self, x: &[f64], y: f64, lr: f64) {
        let err = self.forward_unchecked(x) - y;
        let g = lr * sign(err);
        if g == 0.0 {
            return;
        }
        let p = self.window;
        for j in 0..self.hidden {
            let v = self.output_weights[j];
            let row = &mut self.hidden_weights[j * p..(j + 1) * p];
            let h = self.hidden_bias[j] + dot(row, x);
            for (w, xk) in row.iter_mut().zip(x) {
                *w -= g * v * xk;
            }
            self.hidden_bias[j] -= g * v;
            self.output_weights[j] -= g * h;
        }
        self.output_bias -= g;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Optimizer settings for [`train_sgd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Training stops once the epoch MAE reaches this value.
    pub target_mae: f64,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Epochs without a new best MAE before the learning rate is multiplied by `lr_decay`.
    pub plateau_patience: usize,
    /// A new best must undercut the previous one by this relative amount.
    pub plateau_threshold: f64,
    /// `1.0` keeps the rate constant.
    pub lr_decay: f64,
    pub min_learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 50_000,
            target_mae: 1e-3,
            seed: 0,
            plateau_patience: 500,
            plateau_threshold: 1e-2,
            lr_decay: 0.5,
            min_learning_rate: 1e-15,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be at least 1"));
        }
        if !(self.target_mae >= 0.0) {
            return Err(Error::invalid("target MAE must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.plateau_threshold) {
            return Err(Error::invalid("plateau_threshold must lie in [0, 1)"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::invalid("lr_decay must lie in (0, 1]"));
        }
        if !(self.min_learning_rate >= 0.0) {
            return Err(Error::invalid("min_learning_rate must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub final_train_mae: f64,
    /// Training MAE after each epoch.
    pub cost_history: Vec<f64>,
    pub seed: u64,
    pub final_learning_rate: f64,
}

/// Per-example stochastic subgradient descent on the mean absolute error.
///
/// Each epoch visits the examples in a freshly shuffled order, then measures
/// the MAE of the whole set with the updated parameters.
pub fn train_sgd(mlp: &mut Mlp, data: &WindowSet, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    mlp.mae(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut lr = cfg.learning_rate;
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    let mut history = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            mlp.sgd_update(&data.inputs[i], data.labels[i], lr);
        }
        let cost = mlp.mae(data)?;
        if !cost.is_finite() || !mlp.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(cost);
        if cost <= cfg.target_mae {
            break;
        }
        if cost < best * (1.0 - cfg.plateau_threshold) {
            best = cost;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.plateau_patience && cfg.lr_decay < 1.0 {
                lr = (lr * cfg.lr_decay).max(cfg.min_learning_rate);
                since_best = 0;
            }
        }
    }

    Ok(TrainReport {
        epochs_run: history.len(),
        final_train_mae: history.last().copied().unwrap_or(f64::NAN),
        cost_history: history,
        seed: cfg.seed,
        final_learning_rate: lr,
    })
}

/// Closed-loop rollout: each output is appended to the window that produces the next.
pub fn predict_autoregressive(mlp: &Mlp, seed_window: &[f64], n_steps: usize) -> Result<Vec<f64>> {
    mlp.check_input(seed_window)?;
    let mut window = seed_window.to_vec();
    let mut out = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let y = mlp.forward_unchecked(&window);
        if !y.is_finite() {
            return Err(Error::RolloutDiverged { step });
        }
        out.push(y);
        window.rotate_left(1);
        *window.last_mut().unwrap() = y;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pick_last(window: usize) -> Mlp {
        let mut hw = vec![0.0; window];
        hw[window - 1] = 1.0;
        Mlp::from_parts(window, 1, 0, hw, vec![0.0], vec![1.0], 0.0).unwrap()
    }

    #[test]
    fn windows_follow_start_order() {
        let s = TimeSeries::uniform(0.0, 0.1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let w = build_windows(&s, 4, None).unwrap();
        assert_eq!(w.inputs, vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.2, 0.3, 0.4, 0.5]]);
        assert_eq!(w.labels, vec![0.5, 0.6]);
        let flat = build_windows(&TimeSeries::uniform(0.0, 1.0, vec![2.0; 10]), 4, None).unwrap();
        assert_eq!(flat.len(), 6);
        assert!(flat.inputs.iter().all(|x| x == &vec![2.0; 4]));
        let long = TimeSeries::uniform(0.0, 0.05, (0..501).map(|k| k as f64).collect());
        assert_eq!(build_windows(&long, 4, None).unwrap().len(), 497);
        let limited = build_windows(&long, 4, Some(110)).unwrap();
        assert_eq!(limited.len(), 110);
        assert_eq!(limited.labels[109], 113.0);
        assert!(build_windows(&TimeSeries::uniform(0.0, 1.0, vec![1.0; 4]), 4, None).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let a = Mlp::init(4, 32, 7).unwrap();
        assert_eq!(a, Mlp::init(4, 32, 7).unwrap());
        assert_ne!(a.params(), Mlp::init(4, 32, 8).unwrap().params());
        assert_eq!(a.forward(&[0.0; 4]).unwrap(), 0.0);
        assert!(a.hidden_weights().iter().all(|w| w.abs() <= 0.5));
        assert!(a.output_weights().iter().all(|w| w.abs() <= 1.0 / libm::sqrt(32.0)));
    }

    #[test]
    fn forward_of_constructed_maps() {
        let zero = Mlp::from_parts(3, 2, 0, vec![0.0; 6], vec![0.0; 2], vec![0.0; 2], 0.0).unwrap();
        assert_eq!(zero.forward(&[1.0, -2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(zero.collapse_to_affine(), (vec![0.0; 3], 0.0));
        assert_eq!(pick_last(4).forward(&[1.0, 2.0, 3.0, 4.5]).unwrap(), 4.5);
        assert!(pick_last(4).forward(&[1.0]).is_err());
    }

    #[test]
    fn collapse_recovers_constructed_coefficients() {
        // two hidden units whose sum realizes 0.25·x0 - 1.5·x1 + 2 and a 0.5 output bias
        let mlp = Mlp::from_parts(2, 2, 0, vec![0.5, 0.0, 0.0, -3.0], vec![1.0, 1.0], vec![0.5, 0.5], 1.0).unwrap();
        let (coef, b) = mlp.collapse_to_affine();
        assert_eq!(coef, vec![0.25, -1.5]);
        assert_eq!(b, 2.0);
    }

    #[test]
    fn rollout_of_constructed_recurrences() {
        assert_eq!(predict_autoregressive(&pick_last(4), &[1.0, 2.0, 3.0, 4.0], 3).unwrap(), vec![4.0, 4.0, 4.0]);
        let plus_one = Mlp::from_parts(4, 1, 0, vec![0.0, 0.0, 0.0, 1.0], vec![0.0], vec![1.0], 1.0).unwrap();
        assert_eq!(predict_autoregressive(&plus_one, &[1.0, 2.0, 3.0, 4.0], 3).unwrap(), vec![5.0, 6.0, 7.0]);
        assert!(predict_autoregressive(&plus_one, &[1.0], 3).is_err());
    }

    #[test]
    fn rollout_divergence_is_reported() {
        let blowup = Mlp::from_parts(1, 1, 0, vec![1e150], vec![0.0], vec![1e150], 0.0).unwrap();
        assert_eq!(predict_autoregressive(&blowup, &[1.0], 5), Err(Error::RolloutDiverged { step: 1 }));
    }

    #[test]
    fn exact_fit_stops_after_one_epoch() {
        let mlp0 = Mlp::init(3, 4, 1).unwrap();
        let values: Vec<f64> = (0..20).map(|k| libm::sin(0.3 * k as f64)).collect();
        let mut data = WindowSet::from_values(&values, 3, None, 0.1).unwrap();
        data.labels = data.inputs.iter().map(|x| mlp0.forward(x).unwrap()).collect();
        let mut mlp = mlp0.clone();
        let report = train_sgd(&mut mlp, &data, &TrainConfig::default()).unwrap();
        assert_eq!(report.epochs_run, 1);
        assert_eq!(report.final_train_mae, 0.0);
        assert_eq!(mlp, mlp0);
    }

    #[test]
    fn divergence_is_reported() {
        let values: Vec<f64> = (0..30).map(|k| 1e3 * libm::cos(k as f64)).collect();
        let data = WindowSet::from_values(&values, 4, None, 0.1).unwrap();
        let mut mlp = Mlp::init(4, 16, 3).unwrap();
        let cfg = TrainConfig { learning_rate: 10.0, max_epochs: 200, ..TrainConfig::default() };
        assert!(matches!(train_sgd(&mut mlp, &data, &cfg), Err(Error::TrainingDiverged { .. })));
    }

    #[test]
    fn report_history_matches_epochs() {
        let values: Vec<f64> = (0..40).map(|k| libm::cos(0.2 * k as f64)).collect();
        let data = WindowSet::from_values(&values, 4, None, 0.1).unwrap();
        let mut mlp = Mlp::init(4, 8, 3).unwrap();
        let cfg = TrainConfig { max_epochs: 37, target_mae: 0.0, ..TrainConfig::default() };
        let r = train_sgd(&mut mlp, &data, &cfg).unwrap();
        assert_eq!(r.epochs_run, 37);
        assert_eq!(r.cost_history.len(), 37);
        assert_eq!(r.final_train_mae, *r.cost_history.last().unwrap());
        assert_eq!(r.final_train_mae, mlp.mae(&data).unwrap());
    }
}
