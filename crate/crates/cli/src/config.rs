//! Run configuration: a flat TOML file whose keys can each be overridden by
//! a command-line flag of the same name (underscores become dashes).

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mrsbo::bo::WarmStart;
use mrsbo::encoding::Scheme;
use mrsbo::surrogate::ForestConfig;
use mrsbo::trainer::TrainInit;
use mrsbo::{BoConfig, OutputActivation, SearchSpace, Strategy, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Sine,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WarmMode {
    Random,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    FanIn,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub csv: Option<PathBuf>,
    pub delimiter: char,
    pub has_header: bool,
    /// Target column names or zero-based indices; empty means all columns.
    pub targets: Vec<String>,
    /// Defaults to tanh for the sine problem and linear for CSV data.
    pub activation: Option<OutputActivation>,
    /// Z-score the data with training-split statistics. Defaults to on
    /// exactly when the activation is linear.
    pub normalize: Option<bool>,

    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub rate: f64,

    pub test_fraction: f64,
    /// Takes precedence over `test_fraction` when set.
    pub test_rows: Option<usize>,

    pub strategy: String,
    /// Replaces the encoding letter of `strategy` when set.
    pub encoding: Option<char>,
    pub max_layers: u32,
    pub neurons_min: u32,
    pub neurons_max: u32,
    pub lookback_min: u32,
    pub lookback_max: u32,

    pub max_evals: usize,
    pub init: usize,
    pub q: usize,
    pub threshold: f64,
    /// Number of random warm genotypes; defaults to `2 * length * max_layers`.
    pub warm: Option<usize>,
    pub warm_mode: WarmMode,
    pub proposal_budget: usize,
    pub penalty_scale: f64,
    pub infeasible_objective: f64,
    pub trees: usize,
    pub min_samples_leaf: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub train_init: InitKind,

    pub seed: u64,
    pub out: PathBuf,
    /// Write measured times; when off every timing field is written as 0 so
    /// output files depend only on the configuration.
    pub record_wall_clock: bool,

    pub timecmp_archs: usize,
    pub timecmp_q: usize,
    pub timecmp_epochs: usize,
    pub q_list: Vec<usize>,
    pub repetitions: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bo = BoConfig::default();
        let forest = ForestConfig::default();
        RunConfig {
            problem: ProblemKind::Sine,
            csv: None,
            delimiter: ',',
            has_header: true,
            targets: Vec::new(),
            activation: None,
            normalize: None,
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
            t_start: 0.0,
            t_end: 100.0,
            rate: 10.0,
            test_fraction: 0.2,
            test_rows: None,
            strategy: "C--S".into(),
            encoding: None,
            max_layers: 3,
            neurons_min: 1,
            neurons_max: 100,
            lookback_min: 2,
            lookback_max: 30,
            max_evals: bo.max_evals,
            init: bo.n_init,
            q: bo.q,
            threshold: bo.p_m,
            warm: None,
            warm_mode: WarmMode::Random,
            proposal_budget: bo.proposal_budget,
            penalty_scale: bo.penalty_scale,
            infeasible_objective: bo.infeasible_objective,
            trees: forest.n_trees,
            min_samples_leaf: forest.min_samples_leaf,
            epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            dropout: 0.5,
            train_init: InitKind::FanIn,
            seed: 0,
            out: PathBuf::from("out"),
            record_wall_clock: true,
            timecmp_archs: 20,
            timecmp_q: 100,
            timecmp_epochs: 10,
            q_list: vec![30, 50, 100, 200],
            repetitions: 3,
        }
    }
}

/// Flags mirroring every configuration key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub delimiter: Option<char>,
    #[arg(long)]
    pub has_header: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    #[arg(long)]
    pub activation: Option<OutputActivation>,
    #[arg(long)]
    pub normalize: Option<bool>,
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub frequency: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phase: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub test_rows: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub encoding: Option<char>,
    #[arg(long)]
    pub max_layers: Option<u32>,
    #[arg(long)]
    pub neurons_min: Option<u32>,
    #[arg(long)]
    pub neurons_max: Option<u32>,
    #[arg(long)]
    pub lookback_min: Option<u32>,
    #[arg(long)]
    pub lookback_max: Option<u32>,
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long)]
    pub init: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub warm: Option<usize>,
    #[arg(long)]
    pub warm_mode: Option<WarmMode>,
    #[arg(long)]
    pub proposal_budget: Option<usize>,
    #[arg(long)]
    pub penalty_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub infeasible_objective: Option<f64>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub train_init: Option<InitKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub record_wall_clock: Option<bool>,
    #[arg(long)]
    pub timecmp_archs: Option<usize>,
    #[arg(long)]
    pub timecmp_q: Option<usize>,
    #[arg(long)]
    pub timecmp_epochs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub q_list: Option<Vec<usize>>,
    #[arg(long)]
    pub repetitions: Option<usize>,
}

macro_rules! apply_overrides {
    ($cfg:ident, $ov:ident; $($plain:ident),*; $($opt:ident),*) => {
        $(if let Some(v) = $ov.$plain.clone() { $cfg.$plain = v; })*
        $(if let Some(v) = $ov.$opt.clone() { $cfg.$opt = Some(v); })*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Flags win over file values.
    pub fn apply(&mut self, ov: &Overrides) {
        apply_overrides!(self, ov;
            problem, delimiter, has_header, targets, amplitude, frequency, phase,
            t_start, t_end, rate, test_fraction, strategy, max_layers, neurons_min,
            neurons_max, lookback_min, lookback_max, max_evals, init, q, threshold,
            warm_mode, proposal_budget, penalty_scale, infeasible_objective, trees,
            min_samples_leaf, epochs, batch_size, learning_rate, dropout, train_init,
            seed, out, record_wall_clock, timecmp_archs, timecmp_q, timecmp_epochs,
            q_list, repetitions;
            csv, activation, normalize, test_rows, encoding, warm);
    }

    /// Strategy with the `encoding` key, if any, replacing its last letter.
    pub fn strategy(&self) -> Result<Strategy, CliError> {
        let code = match self.encoding {
            Some(letter) => {
                let mut chars: Vec<char> = self.strategy.chars().collect();
                if let Some(last) = chars.last_mut() {
                    *last = letter;
                }
                chars.into_iter().collect()
            }
            None => self.strategy.clone(),
        };
        Ok(parse_strategy(&code)?)
    }

    pub fn search_space(&self, scheme: Scheme) -> Result<SearchSpace, CliError> {
        Ok(SearchSpace::with_lookback(
            scheme,
            self.max_layers,
            (self.neurons_min, self.neurons_max),
            (self.lookback_min, self.lookback_max),
        )?)
    }

    pub fn activation(&self) -> OutputActivation {
        self.activation.unwrap_or(match self.problem {
            ProblemKind::Sine => OutputActivation::Tanh,
            ProblemKind::Csv => OutputActivation::Linear,
        })
    }

    pub fn normalize(&self) -> bool {
        self.normalize
            .unwrap_or(self.activation() == OutputActivation::Linear)
    }

    pub fn bo_config(&self) -> BoConfig {
        BoConfig {
            max_evals: self.max_evals,
            n_init: self.init,
            p_m: self.threshold,
            q: self.q,
            penalty_scale: self.penalty_scale,
            warm: match (self.warm_mode, self.warm) {
                (WarmMode::Boundary, _) => WarmStart::Boundary,
                (WarmMode::Random, Some(n)) => WarmStart::Random(n),
                (WarmMode::Random, None) => WarmStart::Auto,
            },
            proposal_budget: self.proposal_budget,
            infeasible_objective: self.infeasible_objective,
            forest: ForestConfig {
                n_trees: self.trees,
                min_samples_leaf: self.min_samples_leaf,
                ..ForestConfig::default()
            },
            seed: mrsbo::seed::derive(self.seed, "search", 0),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            dropout: self.dropout,
            init: match self.train_init {
                InitKind::FanIn => TrainInit::FanInUniform,
                InitKind::Normal => TrainInit::StandardNormal,
            },
            seed: mrsbo::seed::derive(self.seed, "train", 0),
            ..TrainConfig::default()
        }
    }
}

/// Parses a `[C-][W-][I-][FSP]` strategy code.
pub fn parse_strategy(code: &str) -> Result<Strategy, mrsbo::bo::BoError> {
    code.parse()
}
