use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{cholesky_solve, cholesky_with_jitter, dot, Matrix};

pub const RIDGE: f64 = 1e-6;
/// Iterated refinement steps that remove the ridge bias.
const REFINEMENTS: usize = 4;

/// Least squares with an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRegression {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LinearRegression {
    /// Normal equations with a small ridge term, followed by refinement
    /// against the unregularised system.
    pub fn fit(x: &[Vec<f64>], y: &[f64], ridge: f64) -> Result<Self> {
        let p = x.first().map_or(0, Vec::len) + 1;
        let design = |row: &[f64], j: usize| if j == 0 { 1.0 } else { row[j - 1] };

        let mut gram = Matrix::zeros(p, p);
        let mut rhs = vec![0.0; p];
        for (row, &t) in x.iter().zip(y) {
            for a in 0..p {
                let xa = design(row, a);
                rhs[a] += xa * t;
                for b in a..p {
                    gram.set(a, b, gram.get(a, b) + xa * design(row, b));
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                gram.set(a, b, gram.get(b, a));
            }
        }
        let mut regularised = gram.clone();
        regularised.add_diagonal(ridge);
        let (l, _) = cholesky_with_jitter(&regularised)?;

        let mut w = cholesky_solve(&l, &rhs);
        for _ in 0..REFINEMENTS {
            let gw = gram.mul_vec(&w);
            let resid: Vec<f64> = rhs.iter().zip(&gw).map(|(b, g)| b - g).collect();
            let step = cholesky_solve(&l, &resid);
            for (wi, s) in w.iter_mut().zip(&step) {
                *wi += s;
            }
        }
        Ok(LinearRegression {
            intercept: w[0],
            weights: w[1..].to_vec(),
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }
}
