//! Random-forest regression over integer genotypes.
//!
//! Each tree is a CART regressor with variance-reduction splits at midpoints
//! between consecutive observed values. The forest prediction is the mean of
//! the tree predictions, its uncertainty the spread across trees.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurrogateError {
    #[error("need at least 2 training points, got {0}")]
    InsufficientData(usize),
    #[error("{xs} inputs but {ys} targets")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("point has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid forest configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    /// Fraction of the dimensions examined per split.
    pub max_features: f64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            min_samples_leaf: 2,
            bootstrap: true,
            max_features: 5.0 / 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[u32]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if f64::from(x[feature]) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_points: usize,
    dim: usize,
}

struct Builder<'a> {
    xs: &'a [Vec<u32>],
    ys: &'a [f64],
    min_leaf: usize,
    n_try: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: &mut [usize], rng: &mut seed::Rng) -> usize {
        let n = idx.len();
        let mean = idx.iter().map(|&i| self.ys[i]).sum::<f64>() / n as f64;
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(mean));
        let first = self.ys[idx[0]];
        if n < 2 * self.min_leaf || idx.iter().all(|&i| self.ys[i] == first) {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(idx, rng) else {
            return at;
        };
        idx.sort_by_key(|&i| self.xs[i][feature]);
        let cut = idx.partition_point(|&i| f64::from(self.xs[i][feature]) <= threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }

    /// Best variance-reduction split over up to `n_try` randomly ordered
    /// non-constant features; ties keep the first split found.
    fn best_split(&self, idx: &[usize], rng: &mut seed::Rng) -> Option<(usize, f64)> {
        let dim = self.xs[idx[0]].len();
        let mut features: Vec<usize> = (0..dim).collect();
        features.shuffle(rng);
        let n = idx.len();
        let total: f64 = idx.iter().map(|&i| self.ys[i]).sum();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut tried = 0;
        let mut order: Vec<usize> = idx.to_vec();
        for f in features {
            if tried == self.n_try {
                break;
            }
            order.sort_by_key(|&i| self.xs[i][f]);
            let lo = self.xs[order[0]][f];
            let hi = self.xs[order[n - 1]][f];
            if lo == hi {
                continue;
            }
            tried += 1;
            let mut left_sum = 0.0;
            for k in 1..n {
                left_sum += self.ys[order[k - 1]];
                if k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let (a, b) = (self.xs[order[k - 1]][f], self.xs[order[k]][f]);
                if a == b {
                    continue;
                }
                let right_sum = total - left_sum;
                // Maximizing this is minimizing the children's squared error.
                let score = left_sum * left_sum / k as f64 + right_sum * right_sum / (n - k) as f64;
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, f, (f64::from(a) + f64::from(b)) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl ForestModel {
    /// Grows `cfg.n_trees` trees. Tree `k` draws from its own sub-stream of a
    /// base seed taken from `rng`, and the training set is put in a canonical
    /// order first, so the model does not depend on the order of `(xs, ys)`.
    pub fn fit<G: AsRef<[u32]>, R: Rng + ?Sized>(
        xs: &[G],
        ys: &[f64],
        cfg: &ForestConfig,
        rng: &mut R,
    ) -> Result<Self, SurrogateError> {
        if xs.len() != ys.len() {
            return Err(SurrogateError::LengthMismatch {
                xs: xs.len(),
                ys: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(SurrogateError::InsufficientData(xs.len()));
        }
        if cfg.n_trees == 0 || cfg.min_samples_leaf == 0 {
            return Err(SurrogateError::InvalidConfig(
                "n_trees and min_samples_leaf must be positive",
            ));
        }
        if !(cfg.max_features > 0.0 && cfg.max_features <= 1.0) {
            return Err(SurrogateError::InvalidConfig(
                "max_features must lie in (0, 1]",
            ));
        }
        let dim = xs[0].as_ref().len();
        if let Some(bad) = xs.iter().find(|x| x.as_ref().len() != dim) {
            return Err(SurrogateError::DimensionMismatch {
                expected: dim,
                got: bad.as_ref().len(),
            });
        }
        let mut rows: Vec<(Vec<u32>, f64)> = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| (x.as_ref().to_vec(), y))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (cx, cy): (Vec<Vec<u32>>, Vec<f64>) = rows.into_iter().unzip();

        let n = cx.len();
        let n_try = ((cfg.max_features * dim as f64).floor() as usize).clamp(1, dim.max(1));
        let base: u64 = rng.random();
        let trees = (0..cfg.n_trees)
            .map(|k| {
                let mut r = seed::stream(base, "tree", k as u64);
                let mut idx: Vec<usize> = if cfg.bootstrap {
                    let mut v: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
                    v.sort_unstable();
                    v
                } else {
                    (0..n).collect()
                };
                let mut b = Builder {
                    xs: &cx,
                    ys: &cy,
                    min_leaf: cfg.min_samples_leaf,
                    n_try,
                    nodes: Vec::new(),
                };
                b.grow(&mut idx, &mut r);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(ForestModel {
            trees,
            n_points: n,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Mean of the tree predictions and their population standard deviation.
    pub fn predict(&self, x: &[u32]) -> Result<(f64, f64), SurrogateError> {
        if x.len() != self.dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let var = preds.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
        Ok((mean, var.max(0.0).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn grid(side: u32, dim: usize) -> Vec<Vec<u32>> {
        let mut out = vec![vec![]];
        for _ in 0..dim {
            out = out
                .into_iter()
                .flat_map(|p: Vec<u32>| {
                    (0..side).map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn rng(k: u64) -> seed::Rng {
        seed::stream(k, "forest-test", 0)
    }

    #[test]
    fn single_exact_tree_interpolates() {
        let xs = grid(4, 2);
        let ys: Vec<f64> = xs.iter().map(|x| (x[0] * 7 + x[1] * x[1]) as f64).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            min_samples_leaf: 1,
            bootstrap: false,
            max_features: 1.0,
        };
        let m = ForestModel::fit(&xs, &ys, &cfg, &mut rng(0)).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let (mean, sd) = m.predict(x).unwrap();
            assert_eq!(mean, *y);
            assert_eq!(sd, 0.0);
        }
    }

    #[test]
    fn constant_targets() {
        let xs = grid(3, 3);
        let ys = vec![0.25; xs.len()];
        let m = ForestModel::fit(&xs, &ys, &ForestConfig::default(), &mut rng(1)).unwrap();
        for x in grid(5, 3) {
            assert_eq!(m.predict(&x).unwrap(), (0.25, 0.0));
        }
    }

    #[test]
    fn errors() {
        let cfg = ForestConfig::default();
        assert_eq!(
            ForestModel::fit(&[vec![1u32]], &[1.0], &cfg, &mut rng(0)),
            Err(SurrogateError::InsufficientData(1))
        );
        assert!(
            ForestModel::fit(&[vec![1u32], vec![1, 2]], &[1.0, 2.0], &cfg, &mut rng(0)).is_err()
        );
        let m = ForestModel::fit(&[vec![1u32], vec![2]], &[1.0, 2.0], &cfg, &mut rng(0)).unwrap();
        assert_eq!(
            m.predict(&[1, 2]),
            Err(SurrogateError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn fits_additive_function() {
        let xs = grid(5, 3);
        let ys: Vec<f64> = xs.iter().map(|x| x.iter().sum::<u32>() as f64).collect();
        let m = ForestModel::fit(&xs, &ys, &ForestConfig::default(), &mut rng(2)).unwrap();
        let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            let (p, _) = m.predict(x).unwrap();
            ss_res += (p - y) * (p - y);
            ss_tot += (y - mean_y) * (y - mean_y);
        }
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 0.9, "R^2 = {r2}");
    }

    #[test]
    fn single_tree_and_identical_trees_have_no_spread() {
        let xs = grid(3, 2);
        let ys: Vec<f64> = xs.iter().map(|x| (x[0] + 2 * x[1]) as f64).collect();
        let one = ForestConfig {
            n_trees: 1,
            ..Default::default()
        };
        let m = ForestModel::fit(&xs, &ys, &one, &mut rng(3)).unwrap();
        let same = ForestConfig {
            n_trees: 10,
            bootstrap: false,
            max_features: 1.0,
            ..Default::default()
        };
        let m2 = ForestModel::fit(&xs, &ys, &same, &mut rng(3)).unwrap();
        for x in grid(4, 2) {
            assert_eq!(m.predict(&x).unwrap().1, 0.0);
            assert_eq!(m2.predict(&x).unwrap().1, 0.0);
        }
    }

    /// Averaged over seeds, the forest is more certain at its training
    /// points than far outside the sampled region.
    #[test]
    fn spread_grows_away_from_data() {
        let (mut near, mut far) = (0.0, 0.0);
        for s in 0..20 {
            let mut r = rng(100 + s);
            let xs: Vec<Vec<u32>> = (0..30)
                .map(|_| vec![r.random_range(0..20), r.random_range(0..20)])
                .collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|x| ((x[0] as f64) * 0.3).sin() + x[1] as f64 * 0.1)
                .collect();
            let m = ForestModel::fit(&xs, &ys, &ForestConfig::default(), &mut r).unwrap();
            near += xs.iter().map(|x| m.predict(x).unwrap().1).sum::<f64>() / xs.len() as f64;
            far += m.predict(&[60, 60]).unwrap().1;
        }
        assert!(near <= far, "near {near} far {far}");
    }

    proptest! {
        #[test]
        fn predictions_stay_within_target_range(seed in any::<u64>(), n in 2usize..40) {
            let mut r = rng(seed);
            let xs: Vec<Vec<u32>> = (0..n).map(|_| (0..4).map(|_| r.random_range(0..6)).collect()).collect();
            let ys: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 10.0 - 5.0).collect();
            let cfg = ForestConfig { n_trees: 10, ..Default::default() };
            let m = ForestModel::fit(&xs, &ys, &cfg, &mut r).unwrap();
            let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for _ in 0..20 {
                let x: Vec<u32> = (0..4).map(|_| r.random_range(0..8)).collect();
                let (mean, sd) = m.predict(&x).unwrap();
                prop_assert!(mean >= lo - 1e-12 && mean <= hi + 1e-12);
                prop_assert!(sd >= 0.0 && sd.is_finite());
            }
        }

        #[test]
        fn model_ignores_training_order(seed in any::<u64>(), n in 2usize..30) {
            let mut r = rng(seed);
            let xs: Vec<Vec<u32>> = (0..n).map(|_| (0..3).map(|_| r.random_range(0..5)).collect()).collect();
            let ys: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut r);
            let px: Vec<Vec<u32>> = perm.iter().map(|&i| xs[i].clone()).collect();
            let py: Vec<f64> = perm.iter().map(|&i| ys[i]).collect();
            let cfg = ForestConfig { n_trees: 8, ..Default::default() };
            let a = ForestModel::fit(&xs, &ys, &cfg, &mut rng(7)).unwrap();
            let b = ForestModel::fit(&px, &py, &cfg, &mut rng(7)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
