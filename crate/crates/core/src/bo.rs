//! Bayesian optimization over genotypes with a random-forest surrogate.
//!
//! The loop starts from a Latin hypercube design, optionally augmented with
//! infeasible "warm" genotypes scored zero without evaluation. Each
//! iteration maximizes expected improvement, optionally minus a penalty that
//! grows with the iteration count, decodes the proposal, and either scores
//! it, assigns the infeasible objective, or reuses a stored objective when
//! the architecture was already scored.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{make_windows, SupervisedSet, TimeSeries};
use crate::encoding::{Architecture, EncodingError, Genotype, Scheme, SearchSpace};
use crate::mrs::{self, MrsResult, OutputActivation};
use crate::seed;
use crate::stats::{normal_cdf, normal_pdf};
use crate::surrogate::{ForestConfig, ForestModel, SurrogateError};

#[derive(Debug, Error)]
pub enum BoError {
    #[error("bad strategy code {code:?} at position {position}: {reason}")]
    BadStrategyCode {
        code: String,
        position: usize,
        reason: &'static str,
    },
    #[error("warm start is not defined for the size scheme")]
    UnsupportedScheme,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no evaluated genotype decodes to a scored architecture")]
    NoFeasibleSolution,
    #[error("evaluation of {genotype} failed: {message}")]
    Evaluation {
        genotype: String,
        message: String,
        /// Trace up to the failing evaluation.
        partial: Vec<TraceRow>,
    },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

/// Which search refinements are active, written `[C-][W-][I-][FSP]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub constraint_handling: bool,
    pub warm_start: bool,
    pub infeasible_penalization: bool,
    pub scheme: Scheme,
}

impl Strategy {
    pub fn new(
        constraint_handling: bool,
        warm_start: bool,
        infeasible_penalization: bool,
        scheme: Scheme,
    ) -> Result<Self, BoError> {
        let s = Strategy {
            constraint_handling,
            warm_start,
            infeasible_penalization,
            scheme,
        };
        if scheme == Scheme::Size && infeasible_penalization {
            return Err(BoError::BadStrategyCode {
                code: s.to_string(),
                position: 2,
                reason: "infeasible-solution penalization does not apply to the size scheme",
            });
        }
        if scheme == Scheme::Size && warm_start {
            return Err(BoError::BadStrategyCode {
                code: s.to_string(),
                position: 1,
                reason: "warm start needs infeasible genotypes, which the size scheme lacks",
            });
        }
        Ok(s)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = |on: bool, c: char| if on { c } else { '-' };
        write!(
            f,
            "{}{}{}{}",
            flag(self.constraint_handling, 'C'),
            flag(self.warm_start, 'W'),
            flag(self.infeasible_penalization, 'I'),
            self.scheme.letter()
        )
    }
}

impl FromStr for Strategy {
    type Err = BoError;

    fn from_str(code: &str) -> Result<Self, Self::Err> {
        let bad = |position, reason| BoError::BadStrategyCode {
            code: code.to_owned(),
            position,
            reason,
        };
        let chars: Vec<char> = code.chars().collect();
        if chars.len() != 4 {
            return Err(bad(chars.len().min(4), "expected exactly 4 characters"));
        }
        let flag = |pos: usize, on: &[char]| -> Result<bool, BoError> {
            match chars[pos] {
                '-' => Ok(false),
                c if on.contains(&c) => Ok(true),
                _ => Err(bad(pos, "unexpected character")),
            }
        };
        let c = flag(0, &['C'])?;
        let w = flag(1, &['W', 'w'])?;
        let i = flag(2, &['I'])?;
        let scheme =
            Scheme::from_letter(chars[3]).ok_or_else(|| bad(3, "encoding must be F, S or P"))?;
        Strategy::new(c, w, i, scheme).map_err(|e| match e {
            BoError::BadStrategyCode {
                position, reason, ..
            } => bad(position, reason),
            other => other,
        })
    }
}

/// How warm-start genotypes are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    /// `2 * genotype_length * max_layers` random-zeroing genotypes.
    Auto,
    /// This many random-zeroing genotypes.
    Random(usize),
    /// Every infeasible genotype whose neuron and look-back slots sit at
    /// their minimum or maximum.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    /// Search iterations after the initial design.
    pub max_evals: usize,
    pub n_init: usize,
    pub p_m: f64,
    pub q: usize,
    pub penalty_scale: f64,
    pub warm: WarmStart,
    /// Acquisition evaluations spent per proposal.
    pub proposal_budget: usize,
    /// Objective assigned to infeasible genotypes.
    pub infeasible_objective: f64,
    pub forest: ForestConfig,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            max_evals: 100,
            n_init: 10,
            p_m: 0.01,
            q: 100,
            penalty_scale: 0.5,
            warm: WarmStart::Auto,
            proposal_budget: 2000,
            infeasible_objective: 0.0,
            forest: ForestConfig::default(),
            seed: 0,
        }
    }
}

/// Where a stored objective value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Warm,
    Mrs,
    Infeasible,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// 0 for the initial design, `t + 1` for search iteration `t`.
    pub iter: usize,
    pub genotype: Genotype,
    pub feasible: bool,
    pub duplicate: bool,
    pub mrs: Option<MrsResult>,
    pub objective: f64,
    pub best_so_far: f64,
    pub wall_ms: f64,
}

/// Evaluated genotypes and their objectives.
#[derive(Debug, Clone, Default)]
pub struct SearchState {
    pub x: Vec<Genotype>,
    pub y: Vec<f64>,
    pub origin: Vec<Origin>,
    /// Raw genotypes in `x`, for the constraint penalty.
    pub evaluated: HashSet<Genotype>,
    /// Architectures already scored by the objective.
    pub scored: HashSet<Architecture>,
    pub t: usize,
}

impl SearchState {
    fn push(&mut self, g: Genotype, y: f64, origin: Origin) {
        self.evaluated.insert(g.clone());
        self.x.push(g);
        self.y.push(y);
        self.origin.push(origin);
    }

    pub fn y_max(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first maximal objective among all stored points.
    fn incumbent(&self) -> usize {
        let mut best = 0;
        for (i, &y) in self.y.iter().enumerate() {
            if y > self.y[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoResult {
    pub strategy: Strategy,
    pub best_genotype: Genotype,
    pub best_architecture: Architecture,
    pub best_value: f64,
    pub trace: Vec<TraceRow>,
    pub mrs_calls: usize,
    pub infeasible_proposals: usize,
    pub duplicate_proposals: usize,
    pub warm_count: usize,
    pub seconds: f64,
}

/// `E[max(Z - y_max, 0)]` for `Z ~ N(mean, sd^2)`.
pub fn expected_improvement(mean: f64, sd: f64, y_max: f64) -> f64 {
    let imp = mean - y_max;
    if sd.is_nan() || sd <= 0.0 {
        return imp.max(0.0);
    }
    let z = imp / sd;
    (imp * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// Acquisition value of `g`: expected improvement, minus
/// `penalty_scale * t * penalty(g, X)` when constraint handling is on.
pub fn acquisition(
    model: &ForestModel,
    g: &Genotype,
    state: &SearchState,
    y_max: f64,
    strat: &Strategy,
    cfg: &BoConfig,
) -> f64 {
    let (mean, sd) = model
        .predict(&g.values)
        .expect("genotype matches model dimension");
    let ei = expected_improvement(mean, sd, y_max);
    if strat.constraint_handling {
        ei - cfg.penalty_scale * state.t as f64 * g.penalty(&state.evaluated) as f64
    } else {
        ei
    }
}

/// Budgeted acquisition maximization: half the budget on uniform samples,
/// half on mutation hill climbing split between a climb from the incumbent
/// and one from the best uniform sample. Ties keep the first candidate.
pub fn propose<R: Rng + ?Sized>(
    model: &ForestModel,
    space: &SearchSpace,
    state: &SearchState,
    strat: &Strategy,
    cfg: &BoConfig,
    rng: &mut R,
) -> Genotype {
    let budget = cfg.proposal_budget.max(1);
    let n_uniform = budget - budget / 2;
    let n_climb = budget / 2;
    let y_max = state.y_max();
    let score = |g: &Genotype| acquisition(model, g, state, y_max, strat, cfg);

    let mut best: Option<(Genotype, f64)> = None;
    let consider = |g: &Genotype, s: f64, best: &mut Option<(Genotype, f64)>| {
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            *best = Some((g.clone(), s));
        }
    };
    for _ in 0..n_uniform {
        let g = space.sample_uniform(rng);
        let s = score(&g);
        consider(&g, s, &mut best);
    }
    let best_uniform = best.clone().expect("at least one uniform sample");
    let incumbent = state
        .x
        .get(state.incumbent())
        .cloned()
        .unwrap_or_else(|| best_uniform.0.clone());
    let from_incumbent = n_climb / 2;
    let starts = [
        (incumbent.clone(), score(&incumbent), from_incumbent),
        (best_uniform.0, best_uniform.1, n_climb - from_incumbent),
    ];
    for (start, start_score, steps) in starts {
        let (mut cur, mut cur_score) = (start, start_score);
        for _ in 0..steps {
            let cand = space.random_mutation(&cur, rng);
            let s = score(&cand);
            consider(&cand, s, &mut best);
            if s > cur_score {
                cur = cand;
                cur_score = s;
            }
        }
    }
    best.expect("non-empty candidate set").0
}

/// Infeasible genotypes for warm-starting the surrogate; their objective is
/// the infeasible value and they are never evaluated.
pub fn warm_data<R: Rng + ?Sized>(
    space: &SearchSpace,
    mode: WarmStart,
    rng: &mut R,
) -> Result<Vec<Genotype>, BoError> {
    if space.scheme == Scheme::Size {
        return Err(BoError::UnsupportedScheme);
    }
    let m = space.max_layers as usize;
    match mode {
        WarmStart::Auto => warm_data(
            space,
            WarmStart::Random(2 * space.genotype_length() * m),
            rng,
        ),
        WarmStart::Random(count) => {
            // Slots that can be zeroed: neuron counts (plain) or flags (flag).
            let zeroable: Vec<usize> = match space.scheme {
                Scheme::Plain => (0..m).collect(),
                _ => (0..m).map(|i| 2 * i + 1).collect(),
            };
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let mut g = space.sample_uniform(rng);
                let k = rng.random_range(1..=m);
                for &slot in rand::seq::index::sample(rng, m, k)
                    .iter()
                    .map(|i| &zeroable[i])
                {
                    g.values[slot] = 0;
                }
                if !g.is_feasible() {
                    out.push(g);
                }
            }
            Ok(out)
        }
        WarmStart::Boundary => Ok(boundary_infeasible(space)),
    }
}

fn boundary_infeasible(space: &SearchSpace) -> Vec<Genotype> {
    let mut extremes: Vec<Vec<u32>> = space
        .domains()
        .into_iter()
        .map(|d| match d {
            crate::encoding::SlotDomain::Neurons { lo, hi, zero } => {
                let mut v = if zero { vec![0, lo, hi] } else { vec![lo, hi] };
                v.dedup();
                v
            }
            crate::encoding::SlotDomain::Lookback { lo, hi } => {
                let mut v = vec![lo, hi];
                v.dedup();
                v
            }
            other => (0..other.cardinality()).map(|k| other.value(k)).collect(),
        })
        .collect();
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for choices in extremes.drain(..) {
        out = out
            .into_iter()
            .flat_map(|p| {
                choices.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|v| Genotype::new(space.scheme, v))
        .filter(|g| !g.is_feasible())
        .collect()
}

/// The search loop with an arbitrary objective. `objective(arch, seed)` is
/// called once per newly scored architecture.
pub fn run_with<F>(
    space: &SearchSpace,
    strat: &Strategy,
    cfg: &BoConfig,
    mut objective: F,
) -> Result<BoResult, BoError>
where
    F: FnMut(&Architecture, u64) -> Result<MrsResult, String>,
{
    space.validate()?;
    if space.scheme != strat.scheme {
        return Err(BoError::InvalidConfig(format!(
            "strategy {strat} does not match the {} search space",
            space.scheme
        )));
    }
    if cfg.n_init == 0 {
        return Err(BoError::InvalidConfig("n_init must be positive".into()));
    }
    let started = Instant::now();
    let mut state = SearchState::default();
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut mrs_calls = 0;
    let mut infeasible_proposals = 0;
    let mut duplicate_proposals = 0;

    let mut evaluate = |g: Genotype,
                        iter: usize,
                        state: &mut SearchState,
                        trace: &mut Vec<TraceRow>|
     -> Result<(bool, bool), BoError> {
        let t0 = Instant::now();
        let row = trace.len() as u64;
        let feasible = g.is_feasible();
        let (objective_value, origin, mrs_result) = match g.decode() {
            Err(_) => (cfg.infeasible_objective, Origin::Infeasible, None),
            Ok(arch) if state.scored.contains(&arch) => {
                let pool: Vec<f64> = state
                    .x
                    .iter()
                    .zip(&state.y)
                    .zip(&state.origin)
                    .filter(|((x, _), o)| {
                        matches!(o, Origin::Mrs | Origin::Duplicate)
                            && x.decode().as_ref() == Ok(&arch)
                    })
                    .map(|((_, &y), _)| y)
                    .collect();
                let pick = seed::stream(cfg.seed, "duplicate", row).random_range(0..pool.len());
                (pool[pick], Origin::Duplicate, None)
            }
            Ok(_) if strat.infeasible_penalization && strat.scheme != Scheme::Size && !feasible => {
                (cfg.infeasible_objective, Origin::Infeasible, None)
            }
            Ok(arch) => {
                let r =
                    objective(&arch, seed::derive(cfg.seed, "mrs", row)).map_err(|message| {
                        BoError::Evaluation {
                            genotype: g.to_string(),
                            message,
                            partial: trace.clone(),
                        }
                    })?;
                mrs_calls += 1;
                state.scored.insert(arch);
                (r.prob, Origin::Mrs, Some(r))
            }
        };
        let duplicate = origin == Origin::Duplicate;
        let best_so_far = trace.last().map_or(objective_value, |r: &TraceRow| {
            r.best_so_far.max(objective_value)
        });
        trace.push(TraceRow {
            iter,
            genotype: g.clone(),
            feasible,
            duplicate,
            mrs: mrs_result,
            objective: objective_value,
            best_so_far,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
        state.push(g, objective_value, origin);
        Ok((feasible, duplicate))
    };

    for g in space.sample_lhs(cfg.n_init, &mut seed::stream(cfg.seed, "lhs", 0)) {
        evaluate(g, 0, &mut state, &mut trace)?;
    }
    let mut warm_count = 0;
    if strat.warm_start {
        let warm = warm_data(space, cfg.warm, &mut seed::stream(cfg.seed, "warm", 0))?;
        warm_count = warm.len();
        for g in warm {
            state.push(g, cfg.infeasible_objective, Origin::Warm);
        }
    }
    if state.x.len() < 2 {
        return Err(BoError::InvalidConfig(
            "the surrogate needs at least two initial points".into(),
        ));
    }

    let mut model = ForestModel::fit(
        &state.x,
        &state.y,
        &cfg.forest,
        &mut seed::stream(cfg.seed, "forest", 0),
    )?;
    while state.t < cfg.max_evals {
        let mut rng = seed::stream(cfg.seed, "propose", state.t as u64);
        let h = propose(&model, space, &state, strat, cfg, &mut rng);
        let (feasible, duplicate) = evaluate(h, state.t + 1, &mut state, &mut trace)?;
        infeasible_proposals += usize::from(!feasible);
        duplicate_proposals += usize::from(duplicate);
        model = ForestModel::fit(
            &state.x,
            &state.y,
            &cfg.forest,
            &mut seed::stream(cfg.seed, "forest", state.t as u64 + 1),
        )?;
        state.t += 1;
    }

    let best = (0..state.x.len())
        .filter(|&i| matches!(state.origin[i], Origin::Mrs | Origin::Duplicate))
        .fold(None, |acc: Option<usize>, i| match acc {
            Some(b) if state.y[b] >= state.y[i] => Some(b),
            _ => Some(i),
        })
        .ok_or(BoError::NoFeasibleSolution)?;
    let best_genotype = state.x[best].clone();
    Ok(BoResult {
        strategy: *strat,
        best_architecture: best_genotype.decode()?,
        best_genotype,
        best_value: state.y[best],
        trace,
        mrs_calls,
        infeasible_proposals,
        duplicate_proposals,
        warm_count,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Full search scoring architectures by MAE random sampling on windows of
/// `train`.
pub fn run(
    train: &TimeSeries,
    space: &SearchSpace,
    strat: &Strategy,
    cfg: &BoConfig,
    act: OutputActivation,
) -> Result<BoResult, BoError> {
    let mut windows: HashMap<usize, SupervisedSet> = HashMap::new();
    run_with(space, strat, cfg, |arch, seed| {
        let data = match windows.entry(arch.lookback) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                e.insert(make_windows(train, arch.lookback).map_err(|e| e.to_string())?)
            }
        };
        mrs::mrs(
            data,
            arch,
            cfg.p_m,
            cfg.q,
            act,
            &mut seed::stream(seed, "mrs", 0),
        )
        .map_err(|e| e.to_string())
    })
}
