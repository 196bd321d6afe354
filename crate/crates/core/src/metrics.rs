//! Normalised mean squared error and directional symmetry, with the
//! per-month plus overall report layout.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::aggregation::MonthlySeries;
use crate::error::{Error, Result};
use crate::forecast::{ForecastResult, Method, Mode};
use crate::types::{MonthValue, Unit, Variable, YearMonth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nmse {
    pub per_month: Vec<f64>,
    pub overall: f64,
    /// Set when the two means have opposite signs.
    pub negative_normaliser: bool,
}

fn check_lengths(actual: &[f64], predicted: &[f64], min: usize) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Length(format!(
            "{} actual values against {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.len() < min {
        return Err(Error::Length(format!("need at least {min} values, got {}", actual.len())));
    }
    Ok(())
}

/// Squared error over the product of the two means, averaged over months.
/// The per-month terms average to the overall value.
pub fn nmse(actual: &[f64], predicted: &[f64]) -> Result<Nmse> {
    check_lengths(actual, predicted, 1)?;
    let n = actual.len() as f64;
    let mean_a = actual.iter().sum::<f64>() / n;
    let mean_p = predicted.iter().sum::<f64>() / n;
    let norm = mean_a * mean_p;
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate(format!(
            "product of means is {norm} (actual {mean_a}, predicted {mean_p})"
        )));
    }
    let sq: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).collect();
    let total: f64 = sq.iter().sum();
    Ok(Nmse {
        per_month: sq.iter().map(|s| s / norm).collect(),
        overall: total / (n * norm),
        negative_normaliser: norm < 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSymmetry {
    /// One flag per month from the second on: whether the direction of
    /// change agrees (a zero change counts as agreement).
    pub agree: Vec<bool>,
    pub overall: f64,
}

impl DirectionalSymmetry {
    /// `""` for the first month, then `+` or `-`.
    pub fn signs(&self) -> Vec<String> {
        std::iter::once(String::new())
            .chain(self.agree.iter().map(|&a| if a { "+".into() } else { "-".into() }))
            .collect()
    }
}

pub fn directional_symmetry(actual: &[f64], predicted: &[f64]) -> Result<DirectionalSymmetry> {
    check_lengths(actual, predicted, 2)?;
    let agree: Vec<bool> = (1..actual.len())
        .map(|i| (actual[i] - actual[i - 1]) * (predicted[i] - predicted[i - 1]) >= 0.0)
        .collect();
    let hits = agree.iter().filter(|&&a| a).count();
    Ok(DirectionalSymmetry {
        overall: hits as f64 / agree.len() as f64,
        agree,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<Variable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
    pub months: Vec<YearMonth>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    pub per_month_nmse: Vec<f64>,
    pub overall_nmse: f64,
    pub per_month_direction: Vec<String>,
    /// `None` when fewer than two months overlap.
    pub overall_ds: Option<f64>,
    /// Forecast months without an observed actual.
    pub excluded: Vec<YearMonth>,
    pub warnings: Vec<String>,
}

/// Report over aligned months.
pub fn metrics_report(months: Vec<YearMonth>, actual: Vec<f64>, predicted: Vec<f64>) -> Result<MetricsReport> {
    let e = nmse(&actual, &predicted)?;
    let mut warnings = Vec::new();
    if e.negative_normaliser {
        warnings.push("actual and predicted means have opposite signs; NMSE is negative".to_string());
    }
    let (per_month_direction, overall_ds) = if actual.len() >= 2 {
        let ds = directional_symmetry(&actual, &predicted)?;
        (ds.signs(), Some(ds.overall))
    } else {
        warnings.push("directional symmetry needs at least two months".to_string());
        (vec![String::new(); actual.len()], None)
    };
    Ok(MetricsReport {
        method: None,
        mode: None,
        variable: None,
        unit: None,
        months,
        actual,
        predicted,
        per_month_nmse: e.per_month,
        overall_nmse: e.overall,
        per_month_direction,
        overall_ds,
        excluded: Vec::new(),
        warnings,
    })
}

/// Score a forecast against observed months. Months whose actual is missing
/// are dropped from both series.
pub fn evaluate_case(forecast: &ForecastResult, actuals: &MonthlySeries) -> Result<MetricsReport> {
    let mut months = Vec::new();
    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    let mut excluded = Vec::new();
    for p in &forecast.predictions {
        let ym = YearMonth::new(p.year, p.month);
        match actuals.get(ym) {
            Some(MonthValue::Value(a)) => {
                months.push(ym);
                actual.push(a);
                predicted.push(p.value);
            }
            _ => excluded.push(ym),
        }
    }
    if months.is_empty() {
        return Err(Error::NoOverlap);
    }
    let mut report = metrics_report(months, actual, predicted)?;
    if !excluded.is_empty() {
        report
            .warnings
            .push(format!("{} forecast months have no actual value and were excluded", excluded.len()));
        log::warn!("{} forecast months excluded for missing actuals", excluded.len());
    }
    report.excluded = excluded;
    report.method = Some(forecast.method);
    report.mode = Some(forecast.mode);
    report.variable = Some(forecast.variable);
    report.unit = Some(forecast.unit);
    Ok(report)
}

fn label(r: &MetricsReport, k: usize) -> String {
    match (r.method, r.mode) {
        (Some(Method::Bagging), Some(Mode::Nba)) => "NBA".into(),
        (Some(m), _) => m.name().to_uppercase(),
        _ => format!("#{}", k + 1),
    }
}

/// Aligned text table: one row per month with the NMSE of each report, then
/// the direction signs, and a final `Overall` row.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let labels: Vec<String> = reports.iter().enumerate().map(|(k, r)| label(r, k)).collect();
    let mut out = String::new();
    write!(out, "{:<8}", "Month").unwrap();
    for l in &labels {
        write!(out, " {:>12}", format!("NMSE {l}")).unwrap();
    }
    for l in &labels {
        write!(out, " {:>8}", format!("DS {l}")).unwrap();
    }
    out.push('\n');
    for (i, ym) in first.months.iter().enumerate() {
        write!(out, "{:<8}", ym.month).unwrap();
        for r in reports {
            match r.per_month_nmse.get(i) {
                Some(v) => write!(out, " {v:>12.8}").unwrap(),
                None => write!(out, " {:>12}", "").unwrap(),
            }
        }
        for r in reports {
            let s = r.per_month_direction.get(i).map_or("", String::as_str);
            write!(out, " {s:>8}").unwrap();
        }
        out.push('\n');
    }
    write!(out, "{:<8}", "Overall").unwrap();
    for r in reports {
        write!(out, " {:>12.8}", r.overall_nmse).unwrap();
    }
    for r in reports {
        match r.overall_ds {
            Some(ds) => write!(out, " {ds:>8.3}").unwrap(),
            None => write!(out, " {:>8}", "-").unwrap(),
        }
    }
    out.push('\n');
    out
}
