//! Twelve-month forecasting: lagged univariate and multivariate models over
//! the standard view, and bagged trees over neighbour stations.

mod gp;
mod lagged;
mod lr;
mod mlp;
mod nba;
mod standard;
mod svr;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gp::{default_length_scale, rbf, GaussianProcess, GpParams};
pub use lagged::{
    build_lagged_dataset, impute_series, raw_features, seasonal_terms, LagConfig, LaggedDataset, Standardizer,
    TargetScale, DEFAULT_LAGS,
};
pub use lr::{LinearRegression, RIDGE};
pub use mlp::{Mlp, MlpParams};
pub use nba::{forecast_nba, nba_training_rows, MIN_TRAINING_ROWS};
pub use standard::{forecast_series, forecast_standard, forecast_standard_with, series_from_rows, Forecaster};
pub use svr::{solve as solve_svr, Kernel, SupportVectorRegression, SvrParams, SvrSolution, KKT_TOLERANCE, STOP_GAP};
pub use tree::{fit_regression_tree, BaggedTrees, BaggingParams, RegressionTree, TreeNode};

use crate::error::{Error, Result};
use crate::types::{Unit, Variable};

pub const HORIZON: usize = 12;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gp,
    Lr,
    Smo,
    Mlp,
    Bagging,
}

impl Method {
    pub const STANDARD: [Method; 4] = [Method::Gp, Method::Lr, Method::Smo, Method::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gp => "gp",
            Method::Lr => "lr",
            Method::Smo => "smo",
            Method::Mlp => "mlp",
            Method::Bagging => "bagging",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gp" => Ok(Method::Gp),
            "lr" => Ok(Method::Lr),
            "smo" | "smoreg" | "svr" => Ok(Method::Smo),
            "mlp" => Ok(Method::Mlp),
            "bagging" | "trees" | "baggedtrees" => Ok(Method::Bagging),
            _ => Err(Error::malformed(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Univariate,
    Multivariate,
    Nba,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Univariate => "univariate",
            Mode::Multivariate => "multivariate",
            Mode::Nba => "nba",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "univariate" | "uni" => Ok(Mode::Univariate),
            "multivariate" | "multi" => Ok(Mode::Multivariate),
            "nba" | "neighbour" | "neighbor" => Ok(Mode::Nba),
            _ => Err(Error::malformed(format!("unknown mode {s:?}"))),
        }
    }
}

/// Method-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Learner {
    Gp(GaussianProcess),
    Lr(LinearRegression),
    Smo(SupportVectorRegression),
    Mlp(Mlp),
    Bagging(BaggedTrees),
}

impl Learner {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Learner::Gp(m) => m.predict(x),
            Learner::Lr(m) => m.predict(x),
            Learner::Smo(m) => m.predict(x),
            Learner::Mlp(m) => m.predict(x),
            Learner::Bagging(m) => m.predict(x),
        }
    }
}

/// A learner bound to the standardisation it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub method: Method,
    pub learner: Learner,
    pub scaler: Standardizer,
    pub target_scale: TargetScale,
    pub config: LagConfig,
    pub seed: u64,
}

impl Model {
    /// Prediction in target units from an unstandardised feature vector.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<f64> {
        let z = self.learner.predict(&self.scaler.apply(raw));
        let v = self.target_scale.inverse(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("{} produced a non-finite prediction", self.method)))
        }
    }
}

pub fn train(method: Method, dataset: &LaggedDataset, seed: u64) -> Result<Model> {
    if dataset.rows() == 0 {
        return Err(Error::InsufficientData("empty lagged dataset".into()));
    }
    let (x, y) = (&dataset.features, &dataset.target);
    let learner = match method {
        Method::Gp => Learner::Gp(GaussianProcess::fit(x, y, GpParams::default())?),
        Method::Lr => Learner::Lr(LinearRegression::fit(x, y, RIDGE)?),
        Method::Smo => Learner::Smo(SupportVectorRegression::fit(x, y, SvrParams::rbf(default_length_scale(x)))?),
        Method::Mlp => Learner::Mlp(Mlp::fit(x, y, MlpParams::default(), seed)?),
        Method::Bagging => Learner::Bagging(BaggedTrees::fit(x, y, BaggingParams::default(), seed)),
    };
    let model = Model {
        method,
        learner,
        scaler: dataset.scaler.clone(),
        target_scale: dataset.target_scale,
        config: dataset.config,
        seed,
    };
    if x.iter().any(|r| !model.learner.predict(r).is_finite()) {
        return Err(Error::Numeric(format!("{method} fit is not finite on its training rows")));
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub year: i32,
    pub month: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub mode: Mode,
    pub method: Method,
    pub variable: Variable,
    pub unit: Unit,
    pub predictions: Vec<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_view: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_station: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_view: Option<String>,
    pub seed: u64,
}
