//! MAE random sampling: a training-free fitness for an architecture.
//!
//! The network is evaluated under `Q` independent standard-normal weight
//! draws. A normal distribution truncated to `[0, inf)` is fitted to the `Q`
//! mean absolute errors, and the fitness is its probability mass below the
//! threshold `p_m`:
//!
//! ```text
//! (Phi((p_m - mu) / sigma) - Phi(-mu / sigma)) / (1 - Phi(-mu / sigma))
//! ```

use ndarray::Zip;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::data::SupervisedSet;
use crate::encoding::Architecture;
pub use crate::network::OutputActivation;
use crate::network::{NetworkError, WeightSet};
use crate::seed;
use crate::stats::log_normal_cdf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MrsError {
    #[error("all error samples are identical (sigma = 0)")]
    DegenerateSample,
    #[error("at least two weight samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("empty data set")]
    EmptyData,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrsResult {
    pub mu: f64,
    pub sigma: f64,
    pub prob: f64,
    pub q_used: usize,
}

/// Fresh standard-normal weights for `arch`.
pub fn sample_weights<R: Rng + ?Sized>(
    arch: &Architecture,
    n_features: usize,
    n_outputs: usize,
    rng: &mut R,
) -> WeightSet {
    WeightSet::standard_normal(arch, n_features, n_outputs, rng)
}

/// Mean over samples and output components of `|prediction - target|`.
pub fn mae(w: &WeightSet, data: &SupervisedSet, act: OutputActivation) -> Result<f64, MrsError> {
    if data.is_empty() {
        return Err(MrsError::EmptyData);
    }
    let pred = w.predict(data.inputs.view(), act)?;
    if pred.dim() != data.targets.dim() {
        return Err(NetworkError::DimensionMismatch {
            what: "target columns",
            expected: pred.ncols(),
            got: data.targets.ncols(),
        }
        .into());
    }
    let mut sum = 0.0;
    Zip::from(&pred)
        .and(&data.targets)
        .for_each(|p, t| sum += (p - t).abs());
    Ok(sum / pred.len() as f64)
}

/// Mass of `N(mu, sigma^2)` truncated to `[0, inf)` that lies below `p_m`.
///
/// Both terms of the numerator are formed relative to the larger one in log
/// space, so far-tail inputs do not cancel to `0 / 0`.
pub fn truncated_normal_prob(mu: f64, sigma: f64, p_m: f64) -> Result<f64, MrsError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(MrsError::DegenerateSample);
    }
    if p_m <= 0.0 {
        return Ok(0.0);
    }
    let upper = log_normal_cdf((p_m - mu) / sigma);
    let lower = log_normal_cdf(-mu / sigma);
    // 1 - Phi(-mu/sigma) = Phi(mu/sigma)
    let total = log_normal_cdf(mu / sigma);
    let ratio = (upper - total).exp() * -(lower - upper).exp_m1();
    Ok(ratio.clamp(0.0, 1.0))
}

/// Fitness from already collected error samples.
pub fn fit_samples(errors: &[f64], p_m: f64) -> MrsResult {
    let q = errors.len();
    let mu = crate::stats::mean(errors);
    let sigma = crate::stats::sample_sd(errors);
    let prob = match truncated_normal_prob(mu, sigma, p_m) {
        Ok(p) => p,
        Err(_) if mu < p_m => 1.0,
        Err(_) => 0.0,
    };
    MrsResult {
        mu,
        sigma,
        prob,
        q_used: q,
    }
}

/// MAE of `q` random weight draws. Draw `k` uses its own sub-stream of a
/// base seed taken from `rng`, so the sample set does not depend on the
/// evaluation order.
pub fn error_samples<R: Rng + ?Sized>(
    data: &SupervisedSet,
    arch: &Architecture,
    q: usize,
    act: OutputActivation,
    rng: &mut R,
) -> Result<Vec<f64>, MrsError> {
    let base: u64 = rng.random();
    (0..q)
        .map(|k| {
            let mut r = seed::stream(base, "mrs-sample", k as u64);
            let w = sample_weights(arch, data.n_features(), data.n_outputs(), &mut r);
            mae(&w, data, act)
        })
        .collect()
}

pub fn mrs<R: Rng + ?Sized>(
    data: &SupervisedSet,
    arch: &Architecture,
    p_m: f64,
    q: usize,
    act: OutputActivation,
    rng: &mut R,
) -> Result<MrsResult, MrsError> {
    if q < 2 {
        return Err(MrsError::TooFewSamples(q));
    }
    if data.is_empty() {
        return Err(MrsError::EmptyData);
    }
    let errors = error_samples(data, arch, q, act, rng)?;
    Ok(fit_samples(&errors, p_m))
}
