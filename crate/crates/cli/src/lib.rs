//! Command-line front end for the architecture search: configuration,
//! problem preparation and the four experiment commands.

pub mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use mrsbo::bo::{self, BoError};
use mrsbo::data::{self, make_windows, DataError, NormalizationParams, SplitSpec};
use mrsbo::encoding::{EncodingError, Scheme};
use mrsbo::trainer::{self, TrainError};
use mrsbo::{Architecture, Genotype, OutputActivation, TimeSeries, TrainReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{parse_strategy, Overrides, ProblemKind, RunConfig};
pub use output::{read_trace_best_so_far, TRACE_HEADER};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Search(#[from] BoError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A prepared forecasting problem, possibly normalized.
#[derive(Debug, Clone)]
pub struct Problem {
    pub train: TimeSeries,
    pub test: TimeSeries,
    pub activation: OutputActivation,
    pub normalization: Option<NormalizationParams>,
}

pub fn prepare_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let series = match cfg.problem {
        ProblemKind::Sine => data::gen_sine(
            cfg.amplitude,
            cfg.frequency,
            cfg.phase,
            cfg.t_start,
            cfg.t_end,
            cfg.rate,
        )?,
        ProblemKind::Csv => {
            let path = cfg
                .csv
                .as_ref()
                .ok_or_else(|| CliError::Config("problem csv needs a csv path".into()))?;
            if !cfg.delimiter.is_ascii() {
                return Err(CliError::Config(
                    "delimiter must be a single ASCII character".into(),
                ));
            }
            data::load_csv(path, cfg.delimiter as u8, cfg.has_header)?
        }
    };
    let series = if cfg.targets.is_empty() {
        series
    } else {
        series.with_targets(&cfg.targets)?
    };
    let spec = match cfg.test_rows {
        Some(rows) => SplitSpec::Rows(rows),
        None => SplitSpec::Fraction(cfg.test_fraction),
    };
    let (mut train, mut test) = data::split(&series, spec)?;
    let activation = cfg.activation();
    let normalization = cfg.normalize().then(|| {
        let params = NormalizationParams::fit(&train, None, true);
        train = params.apply(&train);
        test = params.apply(&test);
        params
    });
    let range = match activation {
        OutputActivation::Tanh => Some((-1.0, 1.0)),
        OutputActivation::Sigmoid => Some((0.0, 1.0)),
        OutputActivation::Linear => None,
    };
    if let Some((lo, hi)) = range {
        for ts in [&train, &test] {
            for &j in &ts.targets {
                if ts.values.column(j).iter().any(|&v| v < lo || v > hi) {
                    return Err(CliError::Config(format!(
                        "target column {:?} leaves [{lo}, {hi}], the range of the {activation} output",
                        ts.names[j]
                    )));
                }
            }
        }
    }
    Ok(Problem {
        train,
        test,
        activation,
        normalization,
    })
}

/// Test error of a trained network in the units of the original data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub test_mae: f64,
    pub test_mape: Option<f64>,
}

pub fn train_architecture(
    problem: &Problem,
    arch: &Architecture,
    cfg: &RunConfig,
) -> Result<(TrainReport, TestMetrics), CliError> {
    let train_set = make_windows(&problem.train, arch.lookback)?;
    let test_set = make_windows(&problem.test, arch.lookback)?;
    let report = trainer::train(
        arch,
        &train_set,
        &test_set,
        problem.activation,
        &cfg.train_config(),
    )?;
    let mut pred = report.test_predictions.clone();
    let mut target = test_set.targets.clone();
    if let Some(norm) = &problem.normalization {
        for (k, &j) in problem.test.targets.iter().enumerate() {
            pred.column_mut(k).mapv_inplace(|x| norm.invert_value(j, x));
            target
                .column_mut(k)
                .mapv_inplace(|x| norm.invert_value(j, x));
        }
    }
    let test_mae = (&pred - &target).mapv(f64::abs).mean().unwrap_or(f64::NAN);
    let test_mape = trainer::mape(pred.view(), target.view()).ok();
    Ok((
        report,
        TestMetrics {
            test_mae,
            test_mape,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub strategy: String,
    pub seed: u64,
    pub best_genotype: String,
    pub architecture: Architecture,
    pub best_mrs: f64,
    pub test_mae: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_mape: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub evaluations: usize,
    pub mrs_calls: usize,
    pub infeasible_proposals: usize,
    pub duplicate_proposals: usize,
    pub warm_count: usize,
    pub search_seconds: f64,
    pub train_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub architecture: Architecture,
    pub activation: OutputActivation,
    pub feature_names: Vec<String>,
    pub target_columns: Vec<usize>,
    pub normalization: Option<NormalizationParams>,
    pub weights: mrsbo::WeightSet,
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })
}

fn clock(cfg: &RunConfig, seconds: f64) -> f64 {
    if cfg.record_wall_clock {
        seconds
    } else {
        0.0
    }
}

/// Search, then train the best architecture; writes `trace.csv`,
/// `result.json` and `model.json` into the output directory.
pub fn cmd_search(cfg: &RunConfig) -> Result<SearchSummary, CliError> {
    let started = Instant::now();
    let strategy = cfg.strategy()?;
    let space = cfg.search_space(strategy.scheme)?;
    let problem = prepare_problem(cfg)?;
    create_dir(&cfg.out)?;
    let trace_path = cfg.out.join("trace.csv");

    let result = match bo::run(
        &problem.train,
        &space,
        &strategy,
        &cfg.bo_config(),
        problem.activation,
    ) {
        Ok(r) => r,
        Err(BoError::Evaluation {
            genotype,
            message,
            partial,
        }) => {
            output::write_trace(&trace_path, &partial, cfg.record_wall_clock)?;
            return Err(BoError::Evaluation {
                genotype,
                message,
                partial,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    output::write_trace(&trace_path, &result.trace, cfg.record_wall_clock)?;

    let (report, metrics) = train_architecture(&problem, &result.best_architecture, cfg)?;
    let model = ModelFile {
        architecture: result.best_architecture.clone(),
        activation: problem.activation,
        feature_names: problem.train.names.clone(),
        target_columns: problem.train.targets.clone(),
        normalization: problem.normalization.clone(),
        weights: report.weights.clone(),
    };
    output::write_json(&cfg.out.join("model.json"), &model)?;

    let summary = SearchSummary {
        strategy: strategy.to_string(),
        seed: cfg.seed,
        best_genotype: result.best_genotype.to_string(),
        architecture: result.best_architecture.clone(),
        best_mrs: result.best_value,
        test_mae: metrics.test_mae,
        test_mape: metrics.test_mape,
        final_train_loss: report.loss_curve.last().copied(),
        evaluations: result.trace.len(),
        mrs_calls: result.mrs_calls,
        infeasible_proposals: result.infeasible_proposals,
        duplicate_proposals: result.duplicate_proposals,
        warm_count: result.warm_count,
        search_seconds: clock(cfg, result.seconds),
        train_seconds: clock(cfg, report.seconds),
        total_seconds: clock(cfg, started.elapsed().as_secs_f64()),
    };
    output::write_json(&cfg.out.join("result.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub architecture: Architecture,
    pub test_mae: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_mape: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub train_seconds: f64,
}

/// Trains one architecture given as a genotype of the configured encoding;
/// writes `model.json` and `train.json`.
pub fn cmd_train(cfg: &RunConfig, genotype: &str) -> Result<TrainSummary, CliError> {
    let strategy = cfg.strategy()?;
    let space = cfg.search_space(strategy.scheme)?;
    let g: Genotype = space.parse_genotype(genotype)?;
    let arch = g.decode()?;
    let problem = prepare_problem(cfg)?;
    create_dir(&cfg.out)?;
    let (report, metrics) = train_architecture(&problem, &arch, cfg)?;
    let model = ModelFile {
        architecture: arch.clone(),
        activation: problem.activation,
        feature_names: problem.train.names.clone(),
        target_columns: problem.train.targets.clone(),
        normalization: problem.normalization.clone(),
        weights: report.weights.clone(),
    };
    output::write_json(&cfg.out.join("model.json"), &model)?;
    let summary = TrainSummary {
        architecture: arch,
        test_mae: metrics.test_mae,
        test_mape: metrics.test_mape,
        final_train_loss: report.loss_curve.last().copied(),
        train_seconds: clock(cfg, report.seconds),
    };
    output::write_json(&cfg.out.join("train.json"), &summary)?;
    Ok(summary)
}

/// Per-architecture timings plus their summary statistics.
#[derive(Debug, Clone)]
pub struct TimingTable {
    pub rows: Vec<trainer::TimingRow>,
    pub mrs: trainer::TimingSummary,
    pub adam: trainer::TimingSummary,
}

impl TimingTable {
    /// Median Adam time over median random-sampling time.
    pub fn median_speedup(&self) -> f64 {
        self.adam.median / self.mrs.median
    }
}

/// Times random sampling against a short Adam run on `timecmp_archs`
/// Latin-hypercube architectures from the size-encoded space; writes
/// `timing.csv` and `timing_summary.csv`.
pub fn cmd_timecmp(cfg: &RunConfig) -> Result<TimingTable, CliError> {
    if cfg.timecmp_archs == 0 {
        return Err(CliError::Config("timecmp_archs must be positive".into()));
    }
    let space = cfg.search_space(Scheme::Size)?;
    let problem = prepare_problem(cfg)?;
    create_dir(&cfg.out)?;
    let mut rng = mrsbo::seed::stream(cfg.seed, "timecmp-archs", 0);
    let archs = space
        .sample_lhs(cfg.timecmp_archs, &mut rng)
        .iter()
        .map(Genotype::decode)
        .collect::<Result<Vec<_>, _>>()?;
    let train_cfg = mrsbo::TrainConfig {
        epochs: cfg.timecmp_epochs,
        ..cfg.train_config()
    };
    let rows = trainer::time_comparison(
        &archs,
        &problem.train,
        &problem.test,
        problem.activation,
        cfg.timecmp_q,
        cfg.threshold,
        &train_cfg,
        cfg.seed,
    )?;
    let mrs: Vec<f64> = rows.iter().map(|r| r.mrs_seconds).collect();
    let adam: Vec<f64> = rows.iter().map(|r| r.adam_seconds).collect();
    let table = TimingTable {
        mrs: trainer::TimingSummary::of(&mrs),
        adam: trainer::TimingSummary::of(&adam),
        rows,
    };
    output::write_timing(&cfg.out, &table)?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub q: usize,
    pub repetition: usize,
    pub seed: u64,
    pub best_mrs: f64,
    pub test_mae: f64,
    pub test_mape: Option<f64>,
    pub mrs_calls: usize,
    pub search_seconds: f64,
}

/// Repeats the search for every sample count in `q_list`, with the same
/// seeds across sample counts; writes `tradeoff.csv` and one subdirectory
/// per run.
pub fn cmd_tradeoff(cfg: &RunConfig) -> Result<Vec<TradeoffRow>, CliError> {
    if cfg.q_list.is_empty() || cfg.repetitions == 0 {
        return Err(CliError::Config(
            "q_list and repetitions must be non-empty".into(),
        ));
    }
    create_dir(&cfg.out)?;
    let mut rows = Vec::new();
    for &q in &cfg.q_list {
        for rep in 0..cfg.repetitions {
            let seed = mrsbo::seed::derive(cfg.seed, "tradeoff", rep as u64);
            let run_cfg = RunConfig {
                q,
                seed,
                out: cfg.out.join(format!("q{q}")).join(format!("rep{rep}")),
                ..cfg.clone()
            };
            let s = cmd_search(&run_cfg)?;
            rows.push(TradeoffRow {
                q,
                repetition: rep,
                seed,
                best_mrs: s.best_mrs,
                test_mae: s.test_mae,
                test_mape: s.test_mape,
                mrs_calls: s.mrs_calls,
                search_seconds: s.search_seconds,
            });
        }
    }
    output::write_tradeoff(&cfg.out.join("tradeoff.csv"), &rows)?;
    Ok(rows)
}
