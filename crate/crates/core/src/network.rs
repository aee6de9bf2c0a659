//! Stacked LSTM with a dense output head.
//!
//! Gate blocks are laid out `[input, forget, cell, output]` along the columns
//! of every gate matrix. Batched passes run time-major: the input projection
//! of a whole sequence is one matrix product, the recurrent part one product
//! per step.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array3, ArrayView2, ArrayView3, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::Architecture;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Activation of the dense output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Tanh,
    Sigmoid,
    Linear,
}

impl OutputActivation {
    fn apply(self, x: f64) -> f64 {
        match self {
            OutputActivation::Tanh => x.tanh(),
            OutputActivation::Sigmoid => sigmoid(x),
            OutputActivation::Linear => x,
        }
    }

    /// Derivative expressed through the activated value.
    fn slope(self, y: f64) -> f64 {
        match self {
            OutputActivation::Tanh => 1.0 - y * y,
            OutputActivation::Sigmoid => y * (1.0 - y),
            OutputActivation::Linear => 1.0,
        }
    }
}

impl std::fmt::Display for OutputActivation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputActivation::Tanh => "tanh",
            OutputActivation::Sigmoid => "sigmoid",
            OutputActivation::Linear => "linear",
        })
    }
}

impl std::str::FromStr for OutputActivation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(OutputActivation::Tanh),
            "sigmoid" => Ok(OutputActivation::Sigmoid),
            "linear" => Ok(OutputActivation::Linear),
            other => Err(format!("unknown activation {other:?}")),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `tanh` through one `exp`; about three times cheaper than the libm call
/// and within a few ulps of 1 in absolute terms.
#[inline]
fn tanh(x: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * x).exp()) - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    /// `inputs x 4H`
    pub w_in: Array2<f64>,
    /// `H x 4H`
    pub w_rec: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

impl LstmLayer {
    pub fn hidden(&self) -> usize {
        self.w_rec.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.w_in.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `H x outputs`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// All parameters of one network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub layers: Vec<LstmLayer>,
    pub head: Dense,
}

impl WeightSet {
    fn build(
        arch: &Architecture,
        n_features: usize,
        n_outputs: usize,
        mut fill: impl FnMut(Tensor, usize, usize) -> Array2<f64>,
    ) -> Self {
        let mut fan_in = n_features;
        let layers = arch
            .layers
            .iter()
            .map(|&h| {
                let layer = LstmLayer {
                    w_in: fill(Tensor::Input, fan_in, 4 * h),
                    w_rec: fill(Tensor::Recurrent, h, 4 * h),
                    bias: fill(Tensor::Bias { hidden: h }, 1, 4 * h).remove_axis(Axis(0)),
                };
                fan_in = h;
                layer
            })
            .collect();
        let head = Dense {
            w: fill(Tensor::Head, fan_in, n_outputs),
            b: fill(Tensor::Bias { hidden: fan_in }, 1, n_outputs).remove_axis(Axis(0)),
        };
        WeightSet { layers, head }
    }

    pub fn zeros(arch: &Architecture, n_features: usize, n_outputs: usize) -> Self {
        Self::build(arch, n_features, n_outputs, |_, r, c| Array2::zeros((r, c)))
    }

    /// Every entry i.i.d. standard normal, biases included.
    pub fn standard_normal<R: Rng + ?Sized>(
        arch: &Architecture,
        n_features: usize,
        n_outputs: usize,
        rng: &mut R,
    ) -> Self {
        Self::build(arch, n_features, n_outputs, |_, r, c| {
            Array2::from_shape_simple_fn((r, c), || StandardNormal.sample(rng))
        })
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, where the fan-in of a
    /// gate matrix is its row count and biases use the layer width.
    pub fn fan_in_uniform<R: Rng + ?Sized>(
        arch: &Architecture,
        n_features: usize,
        n_outputs: usize,
        rng: &mut R,
    ) -> Self {
        Self::build(arch, n_features, n_outputs, |t, r, c| {
            let fan_in = match t {
                Tensor::Bias { hidden } => hidden,
                _ => r,
            };
            let limit = 1.0 / (fan_in.max(1) as f64).sqrt();
            let u = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
            Array2::from_shape_simple_fn((r, c), || u.sample(rng))
        })
    }

    pub fn n_features(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn n_outputs(&self) -> usize {
        self.head.b.len()
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Flat views of every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 2);
        for l in &self.layers {
            out.push(l.w_in.as_slice().expect("standard layout"));
            out.push(l.w_rec.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.head.w.as_slice().expect("standard layout"));
        out.push(self.head.b.as_slice().expect("standard layout"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 2);
        for l in &mut self.layers {
            out.push(l.w_in.as_slice_mut().expect("standard layout"));
            out.push(l.w_rec.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.head.w.as_slice_mut().expect("standard layout"));
        out.push(self.head.b.as_slice_mut().expect("standard layout"));
        out
    }

    /// A zero-filled set with the same shapes.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn check_batch(&self, inputs: &ArrayView3<f64>) -> Result<(), NetworkError> {
        let got = inputs.dim().2;
        if got != self.n_features() {
            return Err(NetworkError::DimensionMismatch {
                what: "input features",
                expected: self.n_features(),
                got,
            });
        }
        Ok(())
    }

    /// Runs one window (`lookback x features`) from zero state.
    pub fn forward(
        &self,
        window: ArrayView2<f64>,
        act: OutputActivation,
    ) -> Result<Array1<f64>, NetworkError> {
        let batch = window.insert_axis(Axis(0));
        Ok(self.predict(batch, act)?.remove_axis(Axis(0)))
    }

    /// Predictions for a batch of windows shaped `(batch, lookback, features)`.
    pub fn predict(
        &self,
        inputs: ArrayView3<f64>,
        act: OutputActivation,
    ) -> Result<Array2<f64>, NetworkError> {
        self.check_batch(&inputs)?;
        let (b, steps, _) = inputs.dim();
        let mut seq = time_major(inputs);
        let mut last = Array2::zeros((b, self.n_features()));
        for (k, layer) in self.layers.iter().enumerate() {
            let top = k + 1 == self.layers.len();
            let hsz = layer.hidden();
            let xproj = project(&seq, layer);
            let mut z = Array2::<f64>::zeros((b, 4 * hsz));
            let mut h = Array2::<f64>::zeros((b, hsz));
            let mut c = Array2::<f64>::zeros((b, hsz));
            let mut out = Array3::zeros(if top { (0, b, hsz) } else { (steps, b, hsz) });
            for t in 0..steps {
                z.assign(&xproj.index_axis(Axis(0), t));
                general_mat_mul(1.0, &h, &layer.w_rec, 1.0, &mut z);
                Zip::from(z.rows())
                    .and(c.rows_mut())
                    .and(h.rows_mut())
                    .for_each(|zr, mut cr, mut hr| {
                        let zr = zr.as_slice().expect("row");
                        let cr = cr.as_slice_mut().expect("row");
                        let hr = hr.as_slice_mut().expect("row");
                        for j in 0..hsz {
                            let i = sigmoid(zr[j]);
                            let f = sigmoid(zr[hsz + j]);
                            let g = tanh(zr[2 * hsz + j]);
                            let o = sigmoid(zr[3 * hsz + j]);
                            cr[j] = f * cr[j] + i * g;
                            hr[j] = o * tanh(cr[j]);
                        }
                    });
                if !top {
                    out.index_axis_mut(Axis(0), t).assign(&h);
                }
            }
            if top {
                last = h;
            } else {
                seq = out;
            }
        }
        let mut y = last.dot(&self.head.w) + &self.head.b;
        y.mapv_inplace(|v| act.apply(v));
        Ok(y)
    }

    /// Mean absolute error and its gradient on one batch.
    ///
    /// With `dropout = Some((p, rng))`, inverted dropout with rate `p` is
    /// applied to every layer output that feeds another layer or the head.
    pub fn loss_and_grad<R: Rng + ?Sized>(
        &self,
        inputs: ArrayView3<f64>,
        targets: ArrayView2<f64>,
        act: OutputActivation,
        dropout: Option<(f64, &mut R)>,
    ) -> Result<(f64, WeightSet), NetworkError> {
        self.check_batch(&inputs)?;
        if targets.dim() != (inputs.dim().0, self.n_outputs()) {
            return Err(NetworkError::DimensionMismatch {
                what: "target columns",
                expected: self.n_outputs(),
                got: targets.ncols(),
            });
        }
        let cache = self.forward_cached(inputs, act, dropout);
        let (b, o) = targets.dim();
        let n = (b * o) as f64;
        let mut loss = 0.0;
        let mut dpre = Array2::zeros((b, o));
        Zip::from(&mut dpre)
            .and(&cache.output)
            .and(targets)
            .for_each(|d, &y, &t| {
                let r = y - t;
                loss += r.abs();
                let sign = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                *d = sign * act.slope(y) / n;
            });
        loss /= n;
        let grads = self.backward(&cache, dpre);
        Ok((loss, grads))
    }

    fn forward_cached<R: Rng + ?Sized>(
        &self,
        inputs: ArrayView3<f64>,
        act: OutputActivation,
        mut dropout: Option<(f64, &mut R)>,
    ) -> Cache {
        let (b, steps, _) = inputs.dim();
        let mut seq = time_major(inputs);
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let hsz = layer.hidden();
            let xproj = project(&seq, layer);
            let mut gates = Array3::zeros((steps, b, 4 * hsz));
            let mut cs = Array3::zeros((steps, b, hsz));
            let mut tcs = Array3::zeros((steps, b, hsz));
            let mut hs = Array3::zeros((steps, b, hsz));
            let mut h = Array2::zeros((b, hsz));
            let mut c = Array2::<f64>::zeros((b, hsz));
            for t in 0..steps {
                let mut z = xproj.index_axis(Axis(0), t).to_owned();
                general_mat_mul(1.0, &h, &layer.w_rec, 1.0, &mut z);
                Zip::from(z.rows_mut())
                    .and(c.rows_mut())
                    .and(h.rows_mut())
                    .and(tcs.index_axis_mut(Axis(0), t).rows_mut())
                    .for_each(|mut zr, mut cr, mut hr, mut tr| {
                        let zr = zr.as_slice_mut().expect("row");
                        let cr = cr.as_slice_mut().expect("row");
                        let hr = hr.as_slice_mut().expect("row");
                        let tr = tr.as_slice_mut().expect("row");
                        for j in 0..hsz {
                            let i = sigmoid(zr[j]);
                            let f = sigmoid(zr[hsz + j]);
                            let g = tanh(zr[2 * hsz + j]);
                            let o = sigmoid(zr[3 * hsz + j]);
                            zr[j] = i;
                            zr[hsz + j] = f;
                            zr[2 * hsz + j] = g;
                            zr[3 * hsz + j] = o;
                            cr[j] = f * cr[j] + i * g;
                            tr[j] = tanh(cr[j]);
                            hr[j] = o * tr[j];
                        }
                    });
                gates.index_axis_mut(Axis(0), t).assign(&z);
                cs.index_axis_mut(Axis(0), t).assign(&c);
                hs.index_axis_mut(Axis(0), t).assign(&h);
            }
            let mask = dropout
                .as_mut()
                .map(|(p, rng)| dropout_mask(hs.dim(), *p, &mut **rng));
            let next = match &mask {
                Some(m) => &hs * m,
                None => hs.clone(),
            };
            layers.push(LayerCache {
                input: std::mem::replace(&mut seq, next),
                gates,
                cs,
                tcs,
                hs,
                mask,
            });
        }
        let head_in = seq.index_axis(Axis(0), steps - 1).to_owned();
        let mut output = head_in.dot(&self.head.w) + &self.head.b;
        output.mapv_inplace(|v| act.apply(v));
        Cache {
            layers,
            head_in,
            output,
        }
    }

    fn backward(&self, cache: &Cache, dpre: Array2<f64>) -> WeightSet {
        let mut grads = self.zeros_like();
        grads.head.w = cache.head_in.t().dot(&dpre);
        grads.head.b = dpre.sum_axis(Axis(0));
        let d_head_in = dpre.dot(&self.head.w.t());

        let top = self.layers.len() - 1;
        let steps = cache.layers[top].hs.dim().0;
        // Gradient w.r.t. the (post-dropout) output sequence of the layer above.
        let mut d_out: Array3<f64> = {
            let (_, b, hsz) = cache.layers[top].hs.dim();
            let mut d = Array3::zeros((steps, b, hsz));
            d.index_axis_mut(Axis(0), steps - 1).assign(&d_head_in);
            d
        };
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let lc = &cache.layers[k];
            if let Some(m) = &lc.mask {
                d_out *= m;
            }
            let (_, b, hsz) = lc.hs.dim();
            let mut dz_all = Array3::zeros((steps, b, 4 * hsz));
            let mut dh_next = Array2::<f64>::zeros((b, hsz));
            let mut dc_next = Array2::<f64>::zeros((b, hsz));
            let zero_state = Array2::<f64>::zeros((b, hsz));
            let g = &mut grads.layers[k];
            for t in (0..steps).rev() {
                let c_prev = if t > 0 {
                    lc.cs.index_axis(Axis(0), t - 1)
                } else {
                    zero_state.view()
                };
                let dh_total = &d_out.index_axis(Axis(0), t) + &dh_next;
                let mut dz = dz_all.index_axis_mut(Axis(0), t);
                Zip::from(dz.rows_mut())
                    .and(lc.gates.index_axis(Axis(0), t).rows())
                    .and(lc.tcs.index_axis(Axis(0), t).rows())
                    .and(c_prev.rows())
                    .and(dh_total.rows())
                    .and(dc_next.rows_mut())
                    .for_each(|mut dzr, gr, tr, cpr, dhr, mut dcr| {
                        let dzr = dzr.as_slice_mut().expect("row");
                        let dcr = dcr.as_slice_mut().expect("row");
                        let gr = gr.as_slice().expect("row");
                        for j in 0..hsz {
                            let (i, f, gg, o) =
                                (gr[j], gr[hsz + j], gr[2 * hsz + j], gr[3 * hsz + j]);
                            let tc = tr[j];
                            let dh = dhr[j];
                            let d_o = dh * tc;
                            let dc = dh * o * (1.0 - tc * tc) + dcr[j];
                            dzr[j] = dc * gg * i * (1.0 - i);
                            dzr[hsz + j] = dc * cpr[j] * f * (1.0 - f);
                            dzr[2 * hsz + j] = dc * i * (1.0 - gg * gg);
                            dzr[3 * hsz + j] = d_o * o * (1.0 - o);
                            dcr[j] = dc * f;
                        }
                    });
                let dz = dz_all.index_axis(Axis(0), t);
                dh_next = dz.dot(&layer.w_rec.t());
                if t > 0 {
                    let h_prev = lc.hs.index_axis(Axis(0), t - 1);
                    general_mat_mul(1.0, &h_prev.t(), &dz, 1.0, &mut g.w_rec);
                }
            }
            let flat_dz = dz_all
                .view()
                .into_shape_with_order((steps * b, 4 * hsz))
                .expect("contiguous");
            g.bias = flat_dz.sum_axis(Axis(0));
            let n_in = layer.inputs();
            let flat_x = lc
                .input
                .view()
                .into_shape_with_order((steps * b, n_in))
                .expect("contiguous");
            g.w_in = flat_x.t().dot(&flat_dz);
            if k > 0 {
                d_out = flat_dz
                    .dot(&layer.w_in.t())
                    .into_shape_with_order((steps, b, n_in))
                    .expect("contiguous");
            }
        }
        grads
    }
}

#[derive(Clone, Copy)]
enum Tensor {
    Input,
    Recurrent,
    Bias { hidden: usize },
    Head,
}

struct LayerCache {
    /// Input sequence as seen by the layer, `(steps, batch, inputs)`.
    input: Array3<f64>,
    /// Activated gates `[i, f, g, o]`.
    gates: Array3<f64>,
    cs: Array3<f64>,
    tcs: Array3<f64>,
    hs: Array3<f64>,
    mask: Option<Array3<f64>>,
}

struct Cache {
    layers: Vec<LayerCache>,
    head_in: Array2<f64>,
    output: Array2<f64>,
}

fn time_major(inputs: ArrayView3<f64>) -> Array3<f64> {
    inputs
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .into_owned()
}

/// `seq (steps, batch, inputs) -> (steps, batch, 4H)`, bias included.
fn project(seq: &Array3<f64>, layer: &LstmLayer) -> Array3<f64> {
    let (steps, b, n_in) = seq.dim();
    let flat = seq
        .view()
        .into_shape_with_order((steps * b, n_in))
        .expect("contiguous");
    let out = flat.dot(&layer.w_in) + &layer.bias;
    let width = out.ncols();
    out.into_shape_with_order((steps, b, width))
        .expect("contiguous")
}

fn dropout_mask<R: Rng + ?Sized>(dim: (usize, usize, usize), p: f64, rng: &mut R) -> Array3<f64> {
    let keep = 1.0 - p;
    Array3::from_shape_simple_fn(dim, || {
        if rng.random::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}

/// Copy of rows `idx` of a batch.
pub(crate) fn gather(
    inputs: ArrayView3<f64>,
    targets: ArrayView2<f64>,
    idx: &[usize],
) -> (Array3<f64>, Array2<f64>) {
    let x = inputs.select(Axis(0), idx);
    let y = targets.select(Axis(0), idx);
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;

    fn arch(layers: &[usize], lookback: usize) -> Architecture {
        Architecture {
            layers: layers.to_vec(),
            lookback,
        }
    }

    #[test]
    fn gate_shapes() {
        let w = WeightSet::zeros(&arch(&[5, 3], 4), 2, 1);
        assert_eq!(w.layers[0].w_in.dim(), (2, 20));
        assert_eq!(w.layers[0].w_rec.dim(), (5, 20));
        assert_eq!(w.layers[1].w_in.dim(), (5, 12));
        assert_eq!(w.layers[1].w_rec.dim(), (3, 12));
        assert_eq!(w.head.w.dim(), (3, 1));
        assert_eq!(
            w.n_params(),
            2 * 20 + 5 * 20 + 20 + 5 * 12 + 3 * 12 + 12 + 3 + 1
        );
    }

    #[test]
    fn zero_weights_give_activation_of_zero() {
        let w = WeightSet::zeros(&arch(&[4, 2], 3), 2, 2);
        let window = Array2::from_elem((3, 2), 0.7);
        let y = w.forward(window.view(), OutputActivation::Tanh).unwrap();
        assert_eq!(y, array![0.0, 0.0]);
        let y = w.forward(window.view(), OutputActivation::Sigmoid).unwrap();
        assert_eq!(y, array![0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let w = WeightSet::zeros(&arch(&[4], 3), 2, 1);
        let window = Array2::zeros((3, 5));
        assert!(matches!(
            w.forward(window.view(), OutputActivation::Linear),
            Err(NetworkError::DimensionMismatch {
                expected: 2,
                got: 5,
                ..
            })
        ));
    }

    /// One unit, one feature, two steps, every scalar written out by hand.
    #[test]
    fn single_unit_matches_hand_unroll() {
        let mut w = WeightSet::zeros(&arch(&[1], 2), 1, 1);
        let (wi, wr, b) = (
            [0.5, -0.3, 0.8, 0.2],
            [0.1, 0.4, -0.6, 0.9],
            [0.05, -0.1, 0.2, 0.0],
        );
        for g in 0..4 {
            w.layers[0].w_in[[0, g]] = wi[g];
            w.layers[0].w_rec[[0, g]] = wr[g];
            w.layers[0].bias[g] = b[g];
        }
        w.head.w[[0, 0]] = 1.5;
        w.head.b[0] = -0.25;
        let xs = [0.3, -0.7];

        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        for x in xs {
            let i = sig(wi[0] * x + wr[0] * h + b[0]);
            let f = sig(wi[1] * x + wr[1] * h + b[1]);
            let g = (wi[2] * x + wr[2] * h + b[2]).tanh();
            let o = sig(wi[3] * x + wr[3] * h + b[3]);
            c = f * c + i * g;
            h = o * c.tanh();
        }
        let expected = 1.5 * h - 0.25;

        let window = Array2::from_shape_vec((2, 1), xs.to_vec()).unwrap();
        let y = w.forward(window.view(), OutputActivation::Linear).unwrap();
        assert!((y[0] - expected).abs() < 1e-14, "{} vs {expected}", y[0]);
    }

    #[test]
    fn batched_predict_equals_per_window_forward() {
        let a = arch(&[3, 4], 5);
        let w = WeightSet::standard_normal(&a, 2, 2, &mut seed::stream(1, "w", 0));
        let x = Array3::from_shape_simple_fn((6, 5, 2), {
            let mut r = seed::stream(1, "x", 0);
            move || r.random::<f64>()
        });
        let batch = w.predict(x.view(), OutputActivation::Tanh).unwrap();
        for i in 0..6 {
            let one = w
                .forward(x.index_axis(Axis(0), i), OutputActivation::Tanh)
                .unwrap();
            for j in 0..2 {
                assert!((one[j] - batch[[i, j]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sampled_weights_are_standard_normal() {
        let a = arch(&[120, 60], 3);
        let w = WeightSet::standard_normal(&a, 20, 7, &mut seed::stream(4, "w", 0));
        let all: Vec<f64> = w.tensors().concat();
        assert!(all.len() > 100_000, "{}", all.len());
        let mean = crate::stats::mean(&all);
        let sd = crate::stats::sample_sd(&all);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((sd - 1.0).abs() < 0.02, "sd {sd}");
        let again = WeightSet::standard_normal(&a, 20, 7, &mut seed::stream(4, "w", 0));
        assert_eq!(w, again);
    }

    #[test]
    fn fan_in_uniform_respects_limits() {
        let a = arch(&[16], 3);
        let w = WeightSet::fan_in_uniform(&a, 4, 1, &mut seed::stream(2, "w", 0));
        assert!(w.layers[0].w_in.iter().all(|v| v.abs() <= 0.5));
        assert!(w.layers[0].w_rec.iter().all(|v| v.abs() <= 0.25));
        assert!(w.head.w.iter().all(|v| v.abs() <= 0.25));
    }
}
