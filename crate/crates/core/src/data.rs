//! Time series construction and supervised windowing.

use std::io::Read;
use std::path::Path;

use ndarray::{s, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("row {row}, column {column}: cannot parse {text:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        text: String,
    },
    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}, column {column}: value is not finite")]
    NonFinite { row: usize, column: usize },
    #[error("series needs at least {needed} rows, has {got}")]
    TooShort { needed: usize, got: usize },
    #[error("look-back {lookback} leaves no window in a series of {rows} rows")]
    LookbackTooLarge { lookback: usize, rows: usize },
    #[error("split leaves an empty {0} segment")]
    EmptySplit(&'static str),
    #[error("unknown target column {0:?}")]
    UnknownTarget(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A multivariate series, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Array2<f64>,
    pub names: Vec<String>,
    /// Columns predicted by the network.
    pub targets: Vec<usize>,
}

impl TimeSeries {
    pub fn new(values: Array2<f64>, names: Vec<String>) -> Result<Self, DataError> {
        if values.nrows() < 2 {
            return Err(DataError::TooShort {
                needed: 2,
                got: values.nrows(),
            });
        }
        if let Some(((row, column), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(DataError::NonFinite { row, column });
        }
        let targets = (0..values.ncols()).collect();
        Ok(TimeSeries {
            values,
            names,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Selects target columns by name or zero-based index.
    pub fn with_targets(mut self, cols: &[String]) -> Result<Self, DataError> {
        if cols.is_empty() {
            return Ok(self);
        }
        let mut targets = Vec::with_capacity(cols.len());
        for c in cols {
            let idx = self
                .names
                .iter()
                .position(|n| n == c)
                .or_else(|| c.parse::<usize>().ok().filter(|&i| i < self.n_features()))
                .ok_or_else(|| DataError::UnknownTarget(c.clone()))?;
            targets.push(idx);
        }
        self.targets = targets;
        Ok(self)
    }

    fn rows(&self, start: usize, end: usize) -> TimeSeries {
        TimeSeries {
            values: self.values.slice(s![start..end, ..]).to_owned(),
            names: self.names.clone(),
            targets: self.targets.clone(),
        }
    }
}

/// `y(t) = A sin(2 pi f t + phi)` sampled at `t_start + k / rate` for
/// `k = 0 ..= floor((t_end - t_start) * rate)`.
pub fn gen_sine(
    amplitude: f64,
    frequency: f64,
    phase: f64,
    t_start: f64,
    t_end: f64,
    rate: f64,
) -> Result<TimeSeries, DataError> {
    if rate.is_nan() || rate <= 0.0 || t_end.is_nan() || t_start.is_nan() || t_end <= t_start {
        return Err(DataError::InvalidParameter(
            "sine needs rate > 0 and t_end > t_start".into(),
        ));
    }
    // Round-off guard so that e.g. 100 s at 10 Hz yields exactly 1001 samples.
    let count = ((t_end - t_start) * rate + 1e-9).floor() as usize + 1;
    let values = Array2::from_shape_fn((count, 1), |(k, _)| {
        let t = t_start + k as f64 / rate;
        amplitude * (2.0 * std::f64::consts::PI * frequency * t + phase).sin()
    });
    TimeSeries::new(values, vec!["y".into()])
}

/// The benchmark sine: A = 1, f = 1, phi = 0 over [0, 100] s at 10 Hz.
pub fn default_sine() -> TimeSeries {
    gen_sine(1.0, 1.0, 0.0, 0.0, 100.0, 10.0).expect("valid constants")
}

pub fn load_csv(
    path: impl AsRef<Path>,
    delimiter: u8,
    has_header: bool,
) -> Result<TimeSeries, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, delimiter, has_header)
}

/// Parses a rectangular numeric CSV: rows are time steps, columns features.
pub fn read_csv<R: Read>(
    reader: R,
    delimiter: u8,
    has_header: bool,
) -> Result<TimeSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names: Option<Vec<String>> = None;
    let mut data: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        // Row numbers in errors are 1-based file lines.
        let row = line + 1;
        if let Some(w) = width {
            if record.len() != w {
                return Err(DataError::RaggedRows {
                    row,
                    expected: w,
                    got: record.len(),
                });
            }
        } else {
            width = Some(record.len());
        }
        if has_header && line == 0 {
            names = Some(record.iter().map(str::to_owned).collect());
            continue;
        }
        for (column, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                row,
                column: column + 1,
                text: field.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row,
                    column: column + 1,
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    let width = width.unwrap_or(0);
    let names = names.unwrap_or_else(|| (0..width).map(|i| format!("x{i}")).collect());
    let values = Array2::from_shape_vec((rows, width), data).expect("rectangular by construction");
    TimeSeries::new(values, names)
}

/// Writes `ts` with a header row; floats use shortest round-trip formatting.
pub fn write_csv(ts: &TimeSeries, path: impl AsRef<Path>, delimiter: u8) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(path)?;
    w.write_record(&ts.names)?;
    for row in ts.values.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Columns with zero spread; passed through unscaled.
    pub constant: Vec<bool>,
}

impl NormalizationParams {
    /// Statistics of the first `fit_rows` rows (all rows when `None`).
    pub fn fit(ts: &TimeSeries, fit_rows: Option<usize>, population: bool) -> Self {
        let n = fit_rows.unwrap_or(ts.len()).min(ts.len());
        let view = ts.values.slice(s![..n, ..]);
        let mut mean = Vec::new();
        let mut sd = Vec::new();
        let mut constant = Vec::new();
        for col in view.columns() {
            let m = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|x| (x - m) * (x - m)).sum();
            let div = if population {
                n
            } else {
                n.saturating_sub(1).max(1)
            };
            let s = (ss / div as f64).sqrt();
            mean.push(m);
            constant.push(s.is_nan() || s <= 0.0);
            sd.push(s);
        }
        NormalizationParams { mean, sd, constant }
    }

    pub fn apply(&self, ts: &TimeSeries) -> TimeSeries {
        let mut out = ts.clone();
        for (j, mut col) in out.values.columns_mut().into_iter().enumerate() {
            if !self.constant[j] {
                col.mapv_inplace(|x| (x - self.mean[j]) / self.sd[j]);
            }
        }
        out
    }

    pub fn invert(&self, ts: &TimeSeries) -> TimeSeries {
        let mut out = ts.clone();
        for (j, mut col) in out.values.columns_mut().into_iter().enumerate() {
            if !self.constant[j] {
                col.mapv_inplace(|x| x * self.sd[j] + self.mean[j]);
            }
        }
        out
    }

    /// Maps a normalized value of feature `j` back to the original scale.
    pub fn invert_value(&self, j: usize, x: f64) -> f64 {
        if self.constant[j] {
            x
        } else {
            x * self.sd[j] + self.mean[j]
        }
    }
}

/// Z-score normalization with population standard deviation, fitted on the
/// first `fit_rows` rows so that test statistics never leak into training.
pub fn normalize_zscore(
    ts: &TimeSeries,
    fit_rows: Option<usize>,
) -> (TimeSeries, NormalizationParams) {
    let params = NormalizationParams::fit(ts, fit_rows, true);
    (params.apply(ts), params)
}

/// Input windows and one-step-ahead targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    /// `(samples, lookback, features)`
    pub inputs: Array3<f64>,
    /// `(samples, outputs)`
    pub targets: Array2<f64>,
}

impl SupervisedSet {
    pub fn len(&self) -> usize {
        self.inputs.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookback(&self) -> usize {
        self.inputs.dim().1
    }

    pub fn n_features(&self) -> usize {
        self.inputs.dim().2
    }

    pub fn n_outputs(&self) -> usize {
        self.targets.ncols()
    }
}

/// Sample `i` takes rows `[i, i + lookback)` as input and the target
/// columns of row `i + lookback` as output.
pub fn make_windows(ts: &TimeSeries, lookback: usize) -> Result<SupervisedSet, DataError> {
    let rows = ts.len();
    if lookback == 0 || rows <= lookback {
        return Err(DataError::LookbackTooLarge { lookback, rows });
    }
    let n = rows - lookback;
    let f = ts.n_features();
    let mut inputs = Array3::zeros((n, lookback, f));
    for i in 0..n {
        inputs
            .index_axis_mut(Axis(0), i)
            .assign(&ts.values.slice(s![i..i + lookback, ..]));
    }
    let targets = ts
        .values
        .slice(s![lookback.., ..])
        .select(Axis(1), &ts.targets);
    Ok(SupervisedSet { inputs, targets })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    Fraction(f64),
    Rows(usize),
}

/// Chronological split: the test segment is the final part of the series.
pub fn split(ts: &TimeSeries, spec: SplitSpec) -> Result<(TimeSeries, TimeSeries), DataError> {
    let n = ts.len();
    let test = match spec {
        SplitSpec::Fraction(f) if (0.0..1.0).contains(&f) => (n as f64 * f).round() as usize,
        SplitSpec::Fraction(f) => {
            return Err(DataError::InvalidParameter(format!(
                "test fraction {f} outside [0, 1)"
            )))
        }
        SplitSpec::Rows(r) => r,
    };
    if test == 0 {
        return Err(DataError::EmptySplit("test"));
    }
    if test >= n {
        return Err(DataError::EmptySplit("train"));
    }
    Ok((ts.rows(0, n - test), ts.rows(n - test, n)))
}
