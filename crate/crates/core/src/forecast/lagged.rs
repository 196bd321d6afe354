use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aggregation::MonthlySeries;
use crate::error::{Error, Result};
use crate::types::{MonthValue, Variable, YearMonth};

pub const DEFAULT_LAGS: usize = 12;

/// Feature layout: `lags` previous months of every input variable, then
/// optionally the sine and cosine of the calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagConfig {
    pub lags: usize,
    pub seasonal: bool,
}

impl Default for LagConfig {
    fn default() -> Self {
        LagConfig {
            lags: DEFAULT_LAGS,
            seasonal: true,
        }
    }
}

impl LagConfig {
    pub fn width(&self, inputs: usize) -> usize {
        inputs * self.lags + if self.seasonal { 2 } else { 0 }
    }
}

/// Replace each missing month by the mean of the valid values for the same
/// calendar month.
pub fn impute_series(series: &MonthlySeries) -> Result<MonthlySeries> {
    let mut sum = [0.0f64; 12];
    let mut count = [0usize; 12];
    let mut present = [false; 12];
    for (ym, v) in series.iter() {
        let m = ym.month as usize - 1;
        present[m] = true;
        if let MonthValue::Value(x) = v {
            sum[m] += x;
            count[m] += 1;
        }
    }
    for m in 0..12 {
        if present[m] && count[m] == 0 {
            return Err(Error::InsufficientData(format!(
                "{} has no valid value for calendar month {}",
                series.variable.view_name(),
                m + 1
            )));
        }
    }
    let values = series
        .iter()
        .map(|(ym, v)| match v {
            MonthValue::Value(x) => MonthValue::Value(x),
            MonthValue::Missing => {
                let m = ym.month as usize - 1;
                MonthValue::Value(sum[m] / count[m] as f64)
            }
        })
        .collect();
    Ok(MonthlySeries::new(series.variable, series.unit, series.start, values))
}

/// Sine and cosine encoding of a calendar month.
pub fn seasonal_terms(month: u32) -> [f64; 2] {
    let angle = 2.0 * PI * month as f64 / 12.0;
    [angle.sin(), angle.cos()]
}

/// Unstandardised feature vector for position `t` of the aligned inputs.
/// `t` must be at least `config.lags`.
pub fn raw_features(inputs: &[&[f64]], t: usize, calendar_month: u32, config: &LagConfig) -> Vec<f64> {
    let mut row = Vec::with_capacity(config.width(inputs.len()));
    for series in inputs {
        for k in 1..=config.lags {
            row.push(series[t - k]);
        }
    }
    if config.seasonal {
        row.extend(seasonal_terms(calendar_month));
    }
    row
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

fn is_flat(mean: f64, std: f64) -> bool {
    !(std > 1e-12 * mean.abs().max(1.0))
}

/// Per-column standardisation. Columns with no spread are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// Indices into the raw feature vector that survive.
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Width of the raw feature vector.
    pub width: usize,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>], width: usize) -> Self {
        let mut s = Standardizer {
            kept: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
            width,
        };
        for j in 0..width {
            let (mean, std) = mean_std(rows.iter().map(|r| r[j]));
            if !is_flat(mean, std) {
                s.kept.push(j);
                s.mean.push(mean);
                s.std.push(std);
            }
        }
        s
    }

    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (m, s))| (raw[j] - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl TargetScale {
    /// A target with no spread keeps unit scale.
    pub fn fit(y: &[f64]) -> Self {
        let (mean, std) = mean_std(y.iter().copied());
        TargetScale {
            mean,
            std: if is_flat(mean, std) { 1.0 } else { std },
        }
    }

    pub fn forward(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Standardised design matrix for one target variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedDataset {
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    /// Names of the kept columns.
    pub columns: Vec<String>,
    pub inputs: Vec<Variable>,
    pub target_variable: Variable,
    pub scaler: Standardizer,
    pub target_scale: TargetScale,
    pub config: LagConfig,
    /// Calendar month of the first row's target.
    pub first_target: YearMonth,
}

impl LaggedDataset {
    pub fn rows(&self) -> usize {
        self.features.len()
    }

    pub fn cols(&self) -> usize {
        self.scaler.kept.len()
    }
}

fn column_names(inputs: &[Variable], config: &LagConfig) -> Vec<String> {
    let mut names = Vec::new();
    for v in inputs {
        for k in 1..=config.lags {
            names.push(format!("{}_lag{k}", v.view_name()));
        }
    }
    if config.seasonal {
        names.push("month_sin".into());
        names.push("month_cos".into());
    }
    names
}

/// Dense copies of aligned, fully observed series.
pub(crate) fn dense_inputs(inputs: &[MonthlySeries]) -> Result<Vec<Vec<f64>>> {
    let first = inputs.first().ok_or(Error::Empty("input series"))?;
    inputs
        .iter()
        .map(|s| {
            if s.start != first.start || s.len() != first.len() {
                return Err(Error::Length(format!(
                    "{} is not aligned with {}",
                    s.variable.view_name(),
                    first.variable.view_name()
                )));
            }
            s.values
                .iter()
                .map(|v| {
                    v.value().ok_or_else(|| {
                        Error::InsufficientData(format!("{} still has missing months", s.variable.view_name()))
                    })
                })
                .collect()
        })
        .collect()
}

/// Build the lagged regression problem predicting `inputs[target]` from the
/// lags of every series in `inputs`. Inputs must be imputed and aligned.
pub fn build_lagged_dataset(inputs: &[MonthlySeries], target: usize, config: LagConfig) -> Result<LaggedDataset> {
    let dense = dense_inputs(inputs)?;
    let n = dense[0].len();
    if n <= config.lags {
        return Err(Error::InsufficientData(format!(
            "series of {n} months is too short for {} lags",
            config.lags
        )));
    }
    let views: Vec<&[f64]> = dense.iter().map(Vec::as_slice).collect();
    let months: Vec<YearMonth> = inputs[0].months().collect();
    let raw: Vec<Vec<f64>> = (config.lags..n)
        .map(|t| raw_features(&views, t, months[t].month, &config))
        .collect();
    let y_raw: Vec<f64> = dense[target][config.lags..].to_vec();

    let width = config.width(inputs.len());
    let scaler = Standardizer::fit(&raw, width);
    let target_scale = TargetScale::fit(&y_raw);
    let variables: Vec<Variable> = inputs.iter().map(|s| s.variable).collect();
    let names = column_names(&variables, &config);
    Ok(LaggedDataset {
        features: raw.iter().map(|r| scaler.apply(r)).collect(),
        target: y_raw.iter().map(|&v| target_scale.forward(v)).collect(),
        columns: scaler.kept.iter().map(|&j| names[j].clone()).collect(),
        inputs: variables,
        target_variable: inputs[target].variable,
        scaler,
        target_scale,
        config,
        first_target: months[config.lags],
    })
}
