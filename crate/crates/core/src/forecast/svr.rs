//! ε-insensitive support vector regression solved by sequential minimal
//! optimisation over the 2n-variable dual, choosing the maximal violating
//! pair at every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { length_scale: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { length_scale } => (-squared_distance(a, b) / (2.0 * length_scale * length_scale)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    /// Iteration budget in passes over the data (one pass = n pair updates).
    pub max_passes: usize,
    pub kernel: Kernel,
}

/// KKT tolerance promised for a converged solution.
pub const KKT_TOLERANCE: f64 = 1e-3;
/// Violating-pair gap at which the solver stops. Far tighter than
/// [`KKT_TOLERANCE`] so that rescaling the target, which perturbs the
/// standardised problem only by rounding, cannot move the stopping point.
pub const STOP_GAP: f64 = 1e-7;

impl SvrParams {
    pub fn rbf(length_scale: f64) -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            tol: STOP_GAP,
            max_passes: 10_000,
            kernel: Kernel::Rbf { length_scale },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVectorRegression {
    pub support: Vec<Vec<f64>>,
    /// `α − α*` for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
}

impl SupportVectorRegression {
    pub fn fit(x: &[Vec<f64>], z: &[f64], params: SvrParams) -> Result<Self> {
        Ok(solve(x, z, params)?.model)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * self.kernel.eval(s, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Full dual solution, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct SvrSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub model: SupportVectorRegression,
}

const TAU: f64 = 1e-12;

pub fn solve(x: &[Vec<f64>], z: &[f64], params: SvrParams) -> Result<SvrSolution> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    let c = params.c;
    let k = Matrix::from_fn(n, n, |i, j| params.kernel.eval(&x[i], &x[j]));
    // Variables 0..n are α (sign +1), n..2n are α* (sign −1).
    let m = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |s: usize, t: usize| sign(s) * sign(t) * k.get(s % n, t % n);
    let mut beta = vec![0.0; m];
    let mut grad: Vec<f64> = (0..m)
        .map(|t| if t < n { params.epsilon - z[t] } else { params.epsilon + z[t - n] })
        .collect();

    let in_up = |t: usize, b: f64| if t < n { b < c } else { b > 0.0 };
    let in_low = |t: usize, b: f64| if t < n { b > 0.0 } else { b < c };

    let max_iter = params.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..m {
            let v = -sign(t) * grad[t];
            if in_up(t, beta[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(t, beta[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (q(i, i) + q(j, j) + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        beta[i] = ai;
        beta[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..m {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // Offset from the free variables, or the middle of the feasible band.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..m {
        let yg = sign(t) * grad[t];
        let at_upper = beta[t] >= c;
        let at_lower = beta[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };
    if !rho.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("SMO produced non-finite values".into()));
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without meeting tolerance");
    }

    let alpha = beta[..n].to_vec();
    let alpha_star = beta[n..].to_vec();
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for i in 0..n {
        let cf = alpha[i] - alpha_star[i];
        if cf != 0.0 {
            support.push(x[i].clone());
            coef.push(cf);
        }
    }
    Ok(SvrSolution {
        alpha,
        alpha_star,
        iterations,
        converged,
        model: SupportVectorRegression {
            support,
            coef,
            bias: -rho,
            kernel: params.kernel,
        },
    })
}
