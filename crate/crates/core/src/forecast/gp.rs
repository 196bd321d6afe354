use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, cholesky_with_jitter, median_pairwise_distance, squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpParams {
    pub signal_std: f64,
    pub noise_std: f64,
    /// `None` picks the median pairwise training distance.
    pub length_scale: Option<f64>,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            signal_std: 1.0,
            noise_std: 0.1,
            length_scale: None,
        }
    }
}

/// Median pairwise distance, falling back to 1 when it is zero or undefined.
pub fn default_length_scale(x: &[Vec<f64>]) -> f64 {
    median_pairwise_distance(x).filter(|d| *d > 0.0 && d.is_finite()).unwrap_or(1.0)
}

pub fn rbf(a: &[f64], b: &[f64], length_scale: f64, signal_var: f64) -> f64 {
    signal_var * (-squared_distance(a, b) / (2.0 * length_scale * length_scale)).exp()
}

/// Zero-mean GP regression with a squared-exponential kernel; stores the
/// posterior mean weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProcess {
    pub train_x: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub length_scale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
    /// Extra diagonal added to make the kernel matrix factorisable.
    pub jitter: f64,
}

impl GaussianProcess {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: GpParams) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InsufficientData("no training rows".into()));
        }
        let length_scale = params.length_scale.unwrap_or_else(|| default_length_scale(x));
        let signal_var = params.signal_std * params.signal_std;
        let noise_var = params.noise_std * params.noise_std;
        let n = x.len();
        let mut k = Matrix::from_fn(n, n, |i, j| rbf(&x[i], &x[j], length_scale, signal_var));
        k.add_diagonal(noise_var);
        let (l, jitter) = cholesky_with_jitter(&k)?;
        let alpha = cholesky_solve(&l, y);
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numeric("GP weights are not finite".into()));
        }
        Ok(GaussianProcess {
            train_x: x.to_vec(),
            alpha,
            length_scale,
            signal_var,
            noise_var,
            jitter,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.train_x
            .iter()
            .zip(&self.alpha)
            .map(|(xi, a)| a * rbf(xi, x, self.length_scale, self.signal_var))
            .sum()
    }
}
