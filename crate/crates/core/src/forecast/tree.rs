use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

/// CART regression tree grown by variance reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: TreeNode,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }

    pub fn leaves(&self) -> usize {
        fn l(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => l(left) + l(right),
            }
        }
        l(&self.root)
    }
}

/// Grow a tree on all rows. Every feature and split point is scanned, so the
/// result is deterministic. A node becomes a leaf when its targets are all
/// equal or no split leaves `min_leaf` rows on both sides.
pub fn fit_regression_tree(x: &[Vec<f64>], y: &[f64], min_leaf: usize) -> RegressionTree {
    let idx: Vec<usize> = (0..y.len()).collect();
    RegressionTree {
        root: grow(x, y, idx, min_leaf.max(1)),
    }
}

fn leaf(y: &[f64], idx: &[usize]) -> TreeNode {
    let sum: f64 = idx.iter().map(|&i| y[i]).sum();
    TreeNode::Leaf {
        value: sum / idx.len() as f64,
        samples: idx.len(),
    }
}

fn grow(x: &[Vec<f64>], y: &[f64], idx: Vec<usize>, min_leaf: usize) -> TreeNode {
    let n = idx.len();
    let first = y[idx[0]];
    if n < 2 * min_leaf || idx.iter().all(|&i| y[i] == first) {
        return leaf(y, &idx);
    }
    let features = x[idx[0]].len();
    let total: f64 = idx.iter().map(|&i| y[i]).sum();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.clone();
    for feature in 0..features {
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
        let mut left_sum = 0.0;
        for k in 1..n {
            left_sum += y[order[k - 1]];
            let (lo, hi) = (x[order[k - 1]][feature], x[order[k]][feature]);
            if k < min_leaf || n - k < min_leaf || lo == hi {
                continue;
            }
            let (nl, nr) = (k as f64, (n - k) as f64);
            let diff = left_sum / nl - (total - left_sum) / nr;
            // Between-group sum of squares equals the variance reduction.
            let gain = nl * nr / n as f64 * diff * diff;
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, feature, lo + (hi - lo) / 2.0));
            }
        }
    }
    match best {
        Some((gain, feature, threshold)) if gain > 0.0 => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[i][feature] <= threshold);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow(x, y, l, min_leaf)),
                right: Box::new(grow(x, y, r, min_leaf)),
            }
        }
        _ => leaf(y, &idx),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaggingParams {
    pub trees: usize,
    pub bootstrap: bool,
    pub min_leaf: usize,
}

impl Default for BaggingParams {
    fn default() -> Self {
        BaggingParams {
            trees: 10,
            bootstrap: true,
            min_leaf: 2,
        }
    }
}

/// Bootstrap aggregate of regression trees; prediction is the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    pub trees: Vec<RegressionTree>,
}

impl BaggedTrees {
    /// Tree `b` draws its sample from stream `b` of the seeded generator, so
    /// the ensemble does not depend on scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: BaggingParams, seed: u64) -> Self {
        let n = y.len();
        let trees = (0..params.trees.max(1))
            .into_par_iter()
            .map(|b| {
                if !params.bootstrap {
                    return fit_regression_tree(x, y, params.min_leaf);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let xs: Vec<Vec<f64>> = sample.iter().map(|&i| x[i].clone()).collect();
                let ys: Vec<f64> = sample.iter().map(|&i| y[i]).collect();
                fit_regression_tree(&xs, &ys, params.min_leaf)
            })
            .collect();
        BaggedTrees { trees }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}
