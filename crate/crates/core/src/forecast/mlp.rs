use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` uses ⌈(features + 1) / 2⌉.
    pub hidden: Option<usize>,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            learning_rate: 0.01,
            epochs: 2000,
            hidden: None,
        }
    }
}

/// One tanh hidden layer, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Mlp {
    /// Full-batch gradient descent on half the mean squared error. The output
    /// layer starts at zero so an untrained network predicts 0.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: MlpParams, seed: u64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InsufficientData("no training rows".into()));
        }
        let f = x[0].len();
        let h = params.hidden.unwrap_or((f + 2) / 2).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (f.max(1) as f64).sqrt();
        let mut net = Mlp {
            w1: (0..h).map(|_| (0..f).map(|_| rng.random_range(-bound..bound)).collect()).collect(),
            b1: vec![0.0; h],
            w2: vec![0.0; h],
            b2: 0.0,
        };
        let n = x.len() as f64;
        let lr = params.learning_rate;
        let mut hidden = vec![0.0; h];
        for _ in 0..params.epochs {
            let mut g_w1 = vec![vec![0.0; f]; h];
            let mut g_b1 = vec![0.0; h];
            let mut g_w2 = vec![0.0; h];
            let mut g_b2 = 0.0;
            for (row, &t) in x.iter().zip(y) {
                net.hidden_into(row, &mut hidden);
                let out = net.b2 + hidden.iter().zip(&net.w2).map(|(a, w)| a * w).sum::<f64>();
                let d = (out - t) / n;
                g_b2 += d;
                for u in 0..h {
                    g_w2[u] += d * hidden[u];
                    let dh = d * net.w2[u] * (1.0 - hidden[u] * hidden[u]);
                    g_b1[u] += dh;
                    for (g, xv) in g_w1[u].iter_mut().zip(row) {
                        *g += dh * xv;
                    }
                }
            }
            net.b2 -= lr * g_b2;
            for u in 0..h {
                net.w2[u] -= lr * g_w2[u];
                net.b1[u] -= lr * g_b1[u];
                for (w, g) in net.w1[u].iter_mut().zip(&g_w1[u]) {
                    *w -= lr * g;
                }
            }
        }
        if !net.b2.is_finite() || net.w2.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("MLP weights diverged".into()));
        }
        Ok(net)
    }

    fn hidden_into(&self, x: &[f64], out: &mut [f64]) {
        for (u, o) in out.iter_mut().enumerate() {
            let a = self.b1[u] + self.w1[u].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *o = a.tanh();
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.w2.len()];
        self.hidden_into(x, &mut hidden);
        self.b2 + hidden.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>()
    }
}
