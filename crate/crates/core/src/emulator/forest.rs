//! Random forest of variance-reduction regression trees.
//!
//! Trees grow greedily: each node scans every feature and every boundary
//! between distinct sorted values, keeping the split with the smallest
//! summed child SSE (ties go to the first candidate in feature-then-
//! position order, which makes training deterministic). All features are
//! candidates at every split; in a 4-D input space feature subsampling
//! costs more accuracy than the decorrelation it buys. Randomness enters
//! only through bootstrap resampling, one substream per tree.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, substream};

/// Forest hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Minimum samples per leaf.
    pub min_leaf: usize,
    /// Resample the training set with replacement per tree.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            min_leaf: 2,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Queries with `x[feature] <= threshold` go left. The threshold is
        /// the largest training value routed left, so training points
        /// always replay their own path.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// A trained forest head; prediction is the mean of the tree outputs,
/// which is invariant under tree order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestHead {
    pub params: ForestParams,
    pub trees: Vec<Tree>,
}

impl ForestHead {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }
}

/// Fits `params.n_trees` trees on `(x, y)`. Tree `t` draws its bootstrap
/// indices from `substream(seed, t)`, so the forest is reproducible bit
/// for bit and trees can build in parallel.
pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams, seed: u64) -> Result<ForestHead> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows vs {} targets",
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyInput("forest fit on no rows".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be >= 1".into()));
    }
    if params.min_leaf == 0 || params.min_leaf > n {
        return Err(Error::InvalidArgument(format!(
            "min_leaf must lie in [1, {n}], got {}",
            params.min_leaf
        )));
    }

    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let indices: Vec<usize> = if params.bootstrap {
                let mut rng = stream(substream(seed, t as u64));
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            build_tree(x, y, indices, params.min_leaf)
        })
        .collect();

    Ok(ForestHead {
        params: *params,
        trees,
    })
}

fn build_tree(x: &[Vec<f64>], y: &[f64], indices: Vec<usize>, min_leaf: usize) -> Tree {
    let mut nodes = Vec::new();
    build_node(x, y, indices, min_leaf, &mut nodes);
    Tree { nodes }
}

fn build_node(
    x: &[Vec<f64>],
    y: &[f64],
    indices: Vec<usize>,
    min_leaf: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    nodes.push(Node::Leaf { value: 0.0 });

    let n = indices.len();
    let mean = indices.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let pure = indices.iter().all(|&i| y[i] == y[indices[0]]);
    if n < 2 * min_leaf || pure {
        nodes[id] = Node::Leaf { value: mean };
        return id;
    }

    match best_split(x, y, &indices, min_leaf) {
        None => {
            nodes[id] = Node::Leaf { value: mean };
            id
        }
        Some(split) => {
            let left = build_node(x, y, split.left, min_leaf, nodes);
            let right = build_node(x, y, split.right, min_leaf, nodes);
            nodes[id] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            id
        }
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

fn best_split(x: &[Vec<f64>], y: &[f64], indices: &[usize], min_leaf: usize) -> Option<SplitChoice> {
    let n = indices.len();
    let n_features = x[indices[0]].len();
    let total_sum: f64 = indices.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = indices.iter().map(|&i| y[i] * y[i]).sum();

    let mut best: Option<(f64, usize, usize, Vec<usize>)> = None;
    for feature in 0..n_features {
        let mut order = indices.to_vec();
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));

        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for s in 1..n {
            let i = order[s - 1];
            left_sum += y[i];
            left_sq += y[i] * y[i];
            if s < min_leaf || n - s < min_leaf {
                continue;
            }
            if x[order[s - 1]][feature] == x[order[s]][feature] {
                continue; // cannot separate equal values
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / s as f64)
                + (right_sq - right_sum * right_sum / (n - s) as f64);
            if best.as_ref().is_none_or(|b| sse < b.0) {
                best = Some((sse, feature, s, order.clone()));
            }
        }
    }

    best.map(|(_, feature, s, order)| SplitChoice {
        feature,
        threshold: x[order[s - 1]][feature],
        left: order[..s].to_vec(),
        right: order[s..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_4d(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                vec![t, (t * 3.0) % 7.0, (t * 5.0) % 11.0, -t / 2.0]
            })
            .collect()
    }

    #[test]
    fn single_unbootstrapped_tree_memorizes() {
        let x = grid_4d(30);
        let y: Vec<f64> = (0..30).map(|i| (i as f64).sin() * 10.0).collect();
        let params = ForestParams {
            n_trees: 1,
            min_leaf: 1,
            bootstrap: false,
        };
        let head = fit(&x, &y, &params, 0).unwrap();
        for (row, &target) in x.iter().zip(&y) {
            assert_eq!(head.predict(row), target);
        }
    }

    #[test]
    fn constant_targets_predict_the_constant() {
        let x = grid_4d(20);
        let y = vec![4.25; 20];
        let head = fit(&x, &y, &ForestParams::default(), 1).unwrap();
        for probe in [vec![0.0; 4], vec![100.0, -3.0, 2.0, 9.0]] {
            assert_eq!(head.predict(&probe), 4.25);
        }
    }

    #[test]
    fn same_seed_reproduces_the_forest() {
        let x = grid_4d(40);
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1] - r[2]).collect();
        let a = fit(&x, &y, &ForestParams::default(), 9).unwrap();
        let b = fit(&x, &y, &ForestParams::default(), 9).unwrap();
        assert_eq!(a, b);
        let c = fit(&x, &y, &ForestParams::default(), 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn beats_the_constant_mean_on_a_noisy_quadratic() {
        // 500 train / 500 test rows of y = q(x) + noise; held-out nRMSE must
        // come in under the constant-mean predictor's.
        let mut rng = stream(123);
        let sample = |rng: &mut rand_pcg::Pcg64Mcg| -> (Vec<f64>, f64) {
            let x: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let q = 10.0 + x[0] * x[0] * 3.0 - x[1] * x[1] + x[2] * 0.5;
            let noise = crate::rng::standard_normal(rng) * 0.2;
            (x, q + noise)
        };
        let train: Vec<(Vec<f64>, f64)> = (0..500).map(|_| sample(&mut rng)).collect();
        let test: Vec<(Vec<f64>, f64)> = (0..500).map(|_| sample(&mut rng)).collect();

        let x: Vec<Vec<f64>> = train.iter().map(|(x, _)| x.clone()).collect();
        let y: Vec<f64> = train.iter().map(|(_, y)| *y).collect();
        let head = fit(&x, &y, &ForestParams::default(), 7).unwrap();

        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let y_test: Vec<f64> = test.iter().map(|(_, y)| *y).collect();
        let forest_pred: Vec<f64> = test.iter().map(|(x, _)| head.predict(x)).collect();
        let mean_pred = vec![mean; test.len()];

        let forest_err = crate::emulator::nrmse(&y_test, &forest_pred).unwrap();
        let baseline_err = crate::emulator::nrmse(&y_test, &mean_pred).unwrap();
        assert!(
            forest_err < baseline_err,
            "forest {forest_err} vs mean baseline {baseline_err}"
        );
    }

    #[test]
    fn min_leaf_bounds_are_enforced() {
        let x = grid_4d(5);
        let y = vec![1.0; 5];
        let params = ForestParams {
            n_trees: 1,
            min_leaf: 6,
            bootstrap: false,
        };
        assert!(fit(&x, &y, &params, 0).is_err());
    }

    #[test]
    fn prediction_is_invariant_under_tree_order() {
        let x = grid_4d(25);
        let y: Vec<f64> = x.iter().map(|r| r[0] - r[3]).collect();
        let params = ForestParams {
            n_trees: 16,
            ..ForestParams::default()
        };
        let head = fit(&x, &y, &params, 5).unwrap();
        let mut reversed = head.clone();
        reversed.trees.reverse();
        for probe in &x {
            let a = head.predict(probe);
            let b = reversed.predict(probe);
            assert!((a - b).abs() < 1e-12);
        }
    }
}
