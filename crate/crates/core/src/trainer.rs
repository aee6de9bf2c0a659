//! Adam training with backpropagation through time.
//!
//! Every window is an independent sample; the unrolled network spans exactly
//! the window's look-back with parameters shared across steps. The loss is
//! the mean absolute error, the reported metric.

use std::time::Instant;

use ndarray::{Array2, ArrayView2, Zip};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{make_windows, DataError, SupervisedSet, TimeSeries};
use crate::encoding::Architecture;
use crate::mrs::{self, MrsError, OutputActivation};
use crate::network::{gather, NetworkError, WeightSet};
use crate::seed;
use crate::stats;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss became non-finite in epoch {epoch}")]
    NumericalDivergence { epoch: usize, curve: Vec<f64> },
    #[error("target component {index} is zero; percentage error undefined")]
    ZeroTarget { index: usize },
    #[error("prediction and target shapes differ")]
    ShapeMismatch,
    #[error("empty {0} set")]
    EmptyData(&'static str),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Mrs(#[from] MrsError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// How the trained network's weights are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainInit {
    /// Uniform in `±1/sqrt(fan_in)`.
    FanInUniform,
    /// Standard normal, the distribution the random-sampling fitness uses.
    StandardNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout: f64,
    pub init: TrainInit,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dropout: 0.5,
            init: TrainInit::FanInUniform,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch size must be positive"));
        }
        if !finite_pos(self.learning_rate) || !finite_pos(self.epsilon) {
            return Err(TrainError::InvalidConfig(
                "learning rate and epsilon must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(TrainError::InvalidConfig("betas must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TrainError::InvalidConfig("dropout must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: WeightSet,
    v: WeightSet,
}

impl Adam {
    pub fn new(params: &WeightSet, cfg: &TrainConfig) -> Self {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.epsilon,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut WeightSet, grads: &WeightSet) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2) = (self.beta1, self.beta2);
        let (lr, eps) = (self.lr, self.eps);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub weights: WeightSet,
    /// Mean training loss of each epoch, measured during the epoch.
    pub loss_curve: Vec<f64>,
    pub test_mae: f64,
    /// `None` when a test target is exactly zero.
    pub test_mape: Option<f64>,
    /// Test-set predictions, on the scale of the supplied targets.
    #[serde(skip)]
    pub test_predictions: Array2<f64>,
    pub seconds: f64,
}

/// `100 * mean(|pred - target| / |target|)`.
pub fn mape(predictions: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64, TrainError> {
    if predictions.dim() != targets.dim() {
        return Err(TrainError::ShapeMismatch);
    }
    if targets.is_empty() {
        return Err(TrainError::EmptyData("target"));
    }
    if let Some(index) = targets.iter().position(|&t| t == 0.0) {
        return Err(TrainError::ZeroTarget { index });
    }
    let mut sum = 0.0;
    Zip::from(predictions)
        .and(targets)
        .for_each(|p, t| sum += ((p - t) / t).abs());
    Ok(100.0 * sum / targets.len() as f64)
}

pub fn train(
    arch: &Architecture,
    train_set: &SupervisedSet,
    test_set: &SupervisedSet,
    act: OutputActivation,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    let mut init_rng = seed::stream(cfg.seed, "train-init", 0);
    let (f, o) = (train_set.n_features(), train_set.n_outputs());
    let weights = match cfg.init {
        TrainInit::FanInUniform => WeightSet::fan_in_uniform(arch, f, o, &mut init_rng),
        TrainInit::StandardNormal => WeightSet::standard_normal(arch, f, o, &mut init_rng),
    };
    train_from(weights, train_set, test_set, act, cfg)
}

/// Trains starting from the given weights.
pub fn train_from(
    mut weights: WeightSet,
    train_set: &SupervisedSet,
    test_set: &SupervisedSet,
    act: OutputActivation,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyData("training"));
    }
    if test_set.is_empty() {
        return Err(TrainError::EmptyData("test"));
    }
    let start = Instant::now();
    let mut adam = Adam::new(&weights, cfg);
    let mut shuffle_rng = seed::stream(cfg.seed, "train-shuffle", 0);
    let mut dropout_rng = seed::stream(cfg.seed, "train-dropout", 0);
    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (x, y) = gather(train_set.inputs.view(), train_set.targets.view(), batch);
            let dropout = (cfg.dropout > 0.0).then_some((cfg.dropout, &mut dropout_rng));
            let (loss, grads) = weights.loss_and_grad(x.view(), y.view(), act, dropout)?;
            if !loss.is_finite() {
                curve.push(loss);
                return Err(TrainError::NumericalDivergence { epoch, curve });
            }
            total += loss * batch.len() as f64;
            adam.step(&mut weights, &grads);
        }
        curve.push(total / n as f64);
    }
    let test_predictions = weights.predict(test_set.inputs.view(), act)?;
    let test_mae = mrs::mae(&weights, test_set, act)?;
    let test_mape = mape(test_predictions.view(), test_set.targets.view()).ok();
    Ok(TrainReport {
        weights,
        loss_curve: curve,
        test_mae,
        test_mape,
        test_predictions,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRow {
    pub arch: Architecture,
    pub mrs_seconds: f64,
    pub adam_seconds: f64,
}

/// Mean, median, max, min and sample sd of one timing column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    pub sd: f64,
}

impl TimingSummary {
    pub fn of(xs: &[f64]) -> Self {
        TimingSummary {
            mean: stats::mean(xs),
            median: stats::median(xs),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            sd: stats::sample_sd(xs),
        }
    }
}

/// Wall-clock cost of the random-sampling fitness (`q` draws) against a
/// short Adam run (`train_cfg.epochs` epochs), per architecture, measured
/// sequentially in this process. Window construction is not timed.
#[allow(clippy::too_many_arguments)]
pub fn time_comparison(
    archs: &[Architecture],
    train_series: &TimeSeries,
    test_series: &TimeSeries,
    act: OutputActivation,
    q: usize,
    p_m: f64,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<TimingRow>, TrainError> {
    if archs.is_empty() {
        return Err(TrainError::EmptyData("architecture"));
    }
    let mut rows = Vec::with_capacity(archs.len());
    for (k, arch) in archs.iter().enumerate() {
        let train_set = make_windows(train_series, arch.lookback)?;
        let test_set = make_windows(test_series, arch.lookback)?;

        let mut rng = seed::stream(seed, "timecmp-mrs", k as u64);
        let t0 = Instant::now();
        mrs::mrs(&train_set, arch, p_m, q, act, &mut rng)?;
        let mrs_seconds = t0.elapsed().as_secs_f64();

        let cfg = TrainConfig {
            seed: seed::derive(seed, "timecmp-adam", k as u64),
            ..*train_cfg
        };
        let t0 = Instant::now();
        train(arch, &train_set, &test_set, act, &cfg)?;
        let adam_seconds = t0.elapsed().as_secs_f64();

        rows.push(TimingRow {
            arch: arch.clone(),
            mrs_seconds,
            adam_seconds,
        });
    }
    Ok(rows)
}
