//! Acceptance checks, one line of output per criterion. Criteria run one
//! after another in this process so that wall-clock measurements do not
//! compete for the CPU.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mrsbo::bo::{self, expected_improvement, BoConfig};
use mrsbo::data;
use mrsbo::encoding::{Genotype, Scheme, SearchSpace};
use mrsbo::mrs::truncated_normal_prob;
use mrsbo::{seed, Architecture, OutputActivation, Strategy, WeightSet};
use mrsbo_cli::{cmd_search, cmd_timecmp, read_trace_best_so_far, RunConfig};
use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if $cond {
        } else {
            return Err(format!($($fmt)*));
        }
    };
}

fn within(started: Instant, limit: Duration, detail: String) -> Outcome {
    let took = started.elapsed();
    ensure!(took < limit, "{detail}; took {took:.1?}, limit {limit:?}");
    Ok(format!("{detail}; {took:.1?}"))
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Mass of `N(mu, sigma^2)` in `[a, b]`, integrated over the part of the
/// interval within 12 sd of the mean.
fn normal_mass(mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = (a.max(mu - 12.0 * sigma), b.min(mu + 12.0 * sigma));
    if lo >= hi {
        return 0.0;
    }
    let c = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    simpson(
        |x| c * (-0.5 * ((x - mu) / sigma).powi(2)).exp(),
        lo,
        hi,
        20_000,
    )
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for mu in [0.005, 0.02, 0.1, 0.5, 1.0] {
        for sigma in [0.002, 0.01, 0.1, 0.3, 1.0] {
            for p_m in [0.001, 0.01, 0.1] {
                let oracle =
                    normal_mass(mu, sigma, 0.0, p_m) / normal_mass(mu, sigma, 0.0, f64::INFINITY);
                let got = truncated_normal_prob(mu, sigma, p_m).map_err(|e| e.to_string())?;
                let err = (got - oracle).abs();
                ensure!(
                    err <= 1e-6,
                    "mu {mu} sigma {sigma} p_m {p_m}: {got} vs integral {oracle}"
                );
                worst = worst.max(err);
            }
        }
    }
    within(
        started,
        Duration::from_secs(1),
        format!("75 grid points, max abs error {worst:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = seed::stream(2, "acceptance-ei", 0);
    let mut worst: f64 = 0.0;
    for mean in [-0.5, 0.0, 0.7] {
        for sd in [0.05, 0.4, 1.2] {
            for y_max in [-0.3, 0.0, 0.5] {
                let n = 1_000_000;
                let mut acc = 0.0;
                for _ in 0..n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    acc += (mean + sd * z - y_max).max(0.0);
                }
                let oracle = acc / n as f64;
                let got = expected_improvement(mean, sd, y_max);
                let err = (got - oracle).abs();
                ensure!(
                    err <= 1e-2,
                    "mean {mean} sd {sd} y_max {y_max}: {got} vs Monte Carlo {oracle}"
                );
                worst = worst.max(err);
            }
        }
    }
    within(
        started,
        Duration::from_secs(30),
        format!("27 grid points, max abs error {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let space =
        SearchSpace::with_lookback(Scheme::Plain, 3, (1, 2), (2, 2)).map_err(|e| e.to_string())?;
    let mut all = Vec::new();
    for a in 0..=2 {
        for b in 0..=2 {
            for c in 0..=2 {
                all.push(Genotype::new(Scheme::Plain, vec![a, b, c, 2]));
            }
        }
    }
    // Every third genotype plays the role of the evaluated set.
    let evaluated: HashSet<Genotype> = all.iter().step_by(3).cloned().collect();
    let mut feasible_count = 0;
    for g in &all {
        ensure!(space.check(g).is_ok(), "{g} rejected by the space");
        let neurons = &g.values[..3];
        let nonzero: Vec<u32> = neurons.iter().copied().filter(|&h| h > 0).collect();
        let mut canonical = nonzero.clone();
        canonical.resize(3, 0);
        canonical.push(2);
        let canonical = Genotype::new(Scheme::Plain, canonical);
        // The all-zero pattern decodes to nothing and has no feasible form.
        ensure!(
            canonical.is_feasible() != nonzero.is_empty(),
            "canonical form {canonical}: feasibility"
        );
        let feasible = !nonzero.is_empty() && *g == canonical;
        feasible_count += usize::from(feasible);
        ensure!(g.is_feasible() == feasible, "{g}: feasibility");
        match (g.decode(), nonzero.is_empty()) {
            (Err(_), true) => {}
            (Ok(arch), false) => {
                let expected: Vec<usize> = nonzero.iter().map(|&h| h as usize).collect();
                ensure!(
                    arch.layers == expected && arch.lookback == 2,
                    "{g} decodes to {arch}"
                );
                ensure!(
                    canonical.decode().ok() == Some(arch),
                    "{g} and {canonical} decode apart"
                );
            }
            (d, _) => return Err(format!("{g}: unexpected decode {d:?}")),
        }
        for h in &all {
            let same_group = h.values[..3].iter().filter(|&&x| x > 0).eq(nonzero.iter());
            ensure!(
                (g.decode().ok() == h.decode().ok()) == same_group,
                "{g} and {h} grouped wrongly"
            );
        }
        // Independent zero counting: zeros that precede the last non-zero.
        let last = neurons.iter().rposition(|&h| h > 0);
        let zeros_before = last.map_or(0, |k| neurons[..k].iter().filter(|&&h| h == 0).count());
        let oracle = if evaluated.contains(g) {
            g.len()
        } else {
            zeros_before
        };
        ensure!(
            g.penalty(&evaluated) == oracle,
            "{g}: penalty {} vs {oracle}",
            g.penalty(&evaluated)
        );
    }
    within(
        started,
        Duration::from_secs(1),
        format!("27 genotypes, {feasible_count} feasible"),
    )
}

fn mae_by_forward(w: &WeightSet, x: &Array3<f64>, y: &Array2<f64>, act: OutputActivation) -> f64 {
    let pred = w.predict(x.view(), act).expect("shapes match");
    (&pred - y).mapv(f64::abs).mean().expect("non-empty")
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let cases = [
        (vec![2], OutputActivation::Linear),
        (vec![2], OutputActivation::Tanh),
        (vec![3, 2], OutputActivation::Sigmoid),
    ];
    for (k, (layers, act)) in cases.into_iter().enumerate() {
        let arch = Architecture {
            layers,
            lookback: 3,
        };
        let mut rng = seed::stream(4, "acceptance-grad", k as u64);
        let w = WeightSet::fan_in_uniform(&arch, 2, 1, &mut rng);
        let x = Array3::from_shape_fn((5, 3, 2), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((5, 1), |_| rng.random_range(0.1..0.9));
        let (_, grad) = w
            .loss_and_grad(x.view(), y.view(), act, None::<(f64, &mut seed::Rng)>)
            .map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = grad.tensors().concat();
        let step = 1e-5;
        let mut idx = 0;
        let n_tensors = w.tensors().len();
        for t in 0..n_tensors {
            for j in 0..w.tensors()[t].len() {
                let mut plus = w.clone();
                plus.tensors_mut()[t][j] += step;
                let mut minus = w.clone();
                minus.tensors_mut()[t][j] -= step;
                let numeric = (mae_by_forward(&plus, &x, &y, act)
                    - mae_by_forward(&minus, &x, &y, act))
                    / (2.0 * step);
                let a = analytic[idx];
                let scale = a.abs().max(numeric.abs());
                if scale > 1e-7 {
                    let rel = (a - numeric).abs() / scale;
                    ensure!(
                        rel < 1e-4,
                        "case {k} parameter {idx}: analytic {a} numeric {numeric}"
                    );
                    worst = worst.max(rel);
                }
                idx += 1;
                checked += 1;
            }
        }
    }
    within(
        started,
        Duration::from_secs(10),
        format!("{checked} parameters, max relative error {worst:.2e}"),
    )
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join(format!("mrsbo-acceptance-{}", std::process::id()))
        .join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn criterion_5(traces: &mut Vec<PathBuf>) -> Outcome {
    let started = Instant::now();
    let mut maes = Vec::new();
    for s in 0..5 {
        let cfg = RunConfig {
            strategy: "C--S".into(),
            init: 10,
            max_evals: 50,
            q: 30,
            epochs: 200,
            seed: s,
            out: scratch(&format!("c5-seed{s}")),
            ..RunConfig::default()
        };
        let summary = cmd_search(&cfg).map_err(|e| e.to_string())?;
        traces.push(cfg.out.join("trace.csv"));
        maes.push(summary.test_mae);
    }
    let median = mrsbo::stats::median(&maes);
    ensure!(median <= 0.15, "median test MAE {median} over {maes:?}");
    within(
        started,
        Duration::from_secs(15 * 60),
        format!("median test MAE {median:.4} over 5 seeds {maes:.4?}"),
    )
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let cfg = RunConfig {
        timecmp_archs: 20,
        timecmp_q: 100,
        timecmp_epochs: 10,
        seed: 6,
        out: scratch("c6"),
        ..RunConfig::default()
    };
    let t = cmd_timecmp(&cfg).map_err(|e| e.to_string())?;
    let detail = format!(
        "median seconds: sampling {:.3}, adam {:.3}, adam/sampling {:.3}",
        t.mrs.median,
        t.adam.median,
        t.median_speedup()
    );
    ensure!(t.mrs.median < t.adam.median, "{detail}");
    within(started, Duration::from_secs(10 * 60), detail)
}

fn criterion_7(traces: &mut Vec<PathBuf>) -> Outcome {
    // Every valid strategy code on a small budget, plus the traces written
    // by the other criteria.
    for c in ['-', 'C'] {
        for w in ['-', 'W'] {
            for i in ['-', 'I'] {
                for e in ['F', 'S', 'P'] {
                    let code = format!("{c}{w}{i}{e}");
                    if code.parse::<Strategy>().is_err() {
                        continue;
                    }
                    let cfg = RunConfig {
                        strategy: code.clone(),
                        max_evals: 8,
                        q: 3,
                        epochs: 1,
                        neurons_max: 8,
                        lookback_max: 6,
                        proposal_budget: 100,
                        seed: 7,
                        out: scratch(&format!("c7-{}", code.replace('-', "_"))),
                        ..RunConfig::default()
                    };
                    cmd_search(&cfg).map_err(|e| format!("{code}: {e}"))?;
                    traces.push(cfg.out.join("trace.csv"));
                }
            }
        }
    }
    let mut rows = 0;
    for path in traces.iter() {
        let best = read_trace_best_so_far(path).map_err(|e| e.to_string())?;
        ensure!(!best.is_empty(), "{}: empty trace", path.display());
        for w in best.windows(2) {
            ensure!(
                w[1] >= w[0],
                "{}: best_so_far decreases {} -> {}",
                path.display(),
                w[0],
                w[1]
            );
        }
        rows += best.len();
    }
    Ok(format!(
        "{} trace files, {rows} rows, all non-decreasing",
        traces.len()
    ))
}

fn criterion_8() -> Outcome {
    let started = Instant::now();
    let series = data::default_sine();
    let (train, _) =
        data::split(&series, data::SplitSpec::Fraction(0.2)).map_err(|e| e.to_string())?;
    let space = SearchSpace::sine(Scheme::Flag);
    let (mut warm_total, mut cold_total) = (0usize, 0usize);
    for pair in 0..10 {
        let cfg = BoConfig {
            max_evals: 20,
            q: 10,
            seed: seed::derive(8, "acceptance-warm", pair),
            ..BoConfig::default()
        };
        for (code, total) in [("-W-F", &mut warm_total), ("---F", &mut cold_total)] {
            let strat: Strategy = code.parse().map_err(|e: bo::BoError| e.to_string())?;
            let r = bo::run(&train, &space, &strat, &cfg, OutputActivation::Tanh)
                .map_err(|e| e.to_string())?;
            *total += r.infeasible_proposals;
        }
    }
    let (warm, cold) = (warm_total as f64 / 10.0, cold_total as f64 / 10.0);
    let detail =
        format!("mean infeasible proposals in 20 iterations: warm {warm:.1}, cold {cold:.1}");
    ensure!(warm < cold, "{detail}");
    within(started, Duration::from_secs(10 * 60), detail)
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn criterion_9(traces: &mut Vec<PathBuf>) -> Outcome {
    let base = RunConfig {
        strategy: "CWIF".into(),
        max_evals: 12,
        q: 8,
        epochs: 15,
        neurons_max: 20,
        seed: 9,
        record_wall_clock: false,
        ..RunConfig::default()
    };
    let run = |name: &str, wall: bool| -> Result<PathBuf, String> {
        let cfg = RunConfig {
            out: scratch(name),
            record_wall_clock: wall,
            ..base.clone()
        };
        cmd_search(&cfg).map_err(|e| e.to_string())?;
        Ok(cfg.out)
    };
    let (a, b) = (run("c9-a", false)?, run("c9-b", false)?);
    for file in ["trace.csv", "result.json", "model.json"] {
        ensure!(
            read(&a.join(file))? == read(&b.join(file))?,
            "{file} differs between identical runs"
        );
    }
    // With timings recorded, everything but the timing columns still agrees.
    let c = run("c9-c", true)?;
    let strip = |p: &Path| -> Result<Vec<String>, String> {
        let text = String::from_utf8(read(p)?).map_err(|e| e.to_string())?;
        Ok(text
            .lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_owned())
            .collect())
    };
    ensure!(
        strip(&a.join("trace.csv"))? == strip(&c.join("trace.csv"))?,
        "trace.csv differs outside the wall_ms column"
    );
    traces.extend([
        a.join("trace.csv"),
        b.join("trace.csv"),
        c.join("trace.csv"),
    ]);
    Ok("trace.csv, result.json and model.json byte-identical".into())
}

fn main() -> ExitCode {
    // `cargo test -- --list` and similar harness probes.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut traces = Vec::new();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {detail}");
            }
        }
    };
    report(
        1,
        "truncated-normal probability vs numerical integration",
        &mut criterion_1,
    );
    report(2, "expected improvement vs Monte Carlo", &mut criterion_2);
    report(3, "decode and penalty vs brute force", &mut criterion_3);
    report(4, "BPTT gradient vs central differences", &mut criterion_4);
    report(5, "sine search and training at desk scale", &mut || {
        criterion_5(&mut traces)
    });
    report(
        6,
        "random sampling faster than 10 Adam epochs",
        &mut criterion_6,
    );
    report(9, "identical seeds give identical files", &mut || {
        criterion_9(&mut traces)
    });
    report(
        8,
        "warm start reduces infeasible proposals",
        &mut criterion_8,
    );
    report(7, "best-so-far never decreases", &mut || {
        criterion_7(&mut traces)
    });
    let _ = std::fs::remove_dir_all(
        std::env::temp_dir().join(format!("mrsbo-acceptance-{}", std::process::id())),
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
