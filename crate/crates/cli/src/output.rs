//! Result files. Floats use the shortest representation that parses back
//! to the same value.

use std::fmt::Write as _;
use std::path::Path;

use mrsbo::bo::TraceRow;
use serde::Serialize;

use crate::{CliError, TimingTable, TradeoffRow};

pub const TRACE_HEADER: &str =
    "iter,genotype,feasible,duplicate,mrs_mu,mrs_sigma,mrs_prob,objective_used,best_so_far,wall_ms";

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

pub(crate) fn write_trace(
    path: &Path,
    rows: &[TraceRow],
    wall_clock: bool,
) -> Result<(), CliError> {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        let wall = if wall_clock { r.wall_ms } else { 0.0 };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{:?},{:?},{:?}",
            r.iter,
            r.genotype,
            r.feasible,
            r.duplicate,
            opt(r.mrs.map(|m| m.mu)),
            opt(r.mrs.map(|m| m.sigma)),
            opt(r.mrs.map(|m| m.prob)),
            r.objective,
            r.best_so_far,
            wall
        )
        .expect("writing to a string");
    }
    write(path, &s)
}

/// The `best_so_far` column of a trace file.
pub fn read_trace_best_so_far(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "best_so_far")
        .ok_or_else(|| CliError::Config(format!("{}: no best_so_far column", path.display())))?;
    lines
        .map(|line| {
            line.split(',')
                .nth(col)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Config(format!("{}: bad row {line:?}", path.display())))
        })
        .collect()
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

pub(crate) fn write_timing(dir: &Path, table: &TimingTable) -> Result<(), CliError> {
    let mut s = String::from("layers,lookback,mrs_seconds,adam_seconds\n");
    for r in &table.rows {
        let layers: Vec<String> = r.arch.layers.iter().map(|h| h.to_string()).collect();
        writeln!(
            s,
            "{},{},{:?},{:?}",
            layers.join(";"),
            r.arch.lookback,
            r.mrs_seconds,
            r.adam_seconds
        )
        .expect("writing to a string");
    }
    write(&dir.join("timing.csv"), &s)?;

    let (m, a) = (&table.mrs, &table.adam);
    let mut s = String::from("statistic,mrs_seconds,adam_seconds\n");
    for (name, x, y) in [
        ("mean", m.mean, a.mean),
        ("median", m.median, a.median),
        ("max", m.max, a.max),
        ("min", m.min, a.min),
        ("sd", m.sd, a.sd),
    ] {
        writeln!(s, "{name},{x:?},{y:?}").expect("writing to a string");
    }
    write(&dir.join("timing_summary.csv"), &s)
}

pub(crate) fn write_tradeoff(path: &Path, rows: &[TradeoffRow]) -> Result<(), CliError> {
    let mut s =
        String::from("q,repetition,seed,best_mrs,test_mae,test_mape,mrs_calls,search_seconds\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{:?},{:?},{},{},{:?}",
            r.q,
            r.repetition,
            r.seed,
            r.best_mrs,
            r.test_mae,
            opt(r.test_mape),
            r.mrs_calls,
            r.search_seconds
        )
        .expect("writing to a string");
    }
    write(path, &s)
}
