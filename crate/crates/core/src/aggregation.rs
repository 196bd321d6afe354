//! Temporal aggregation (day, month), spatial fusion across stations, unit
//! conversion and missing-value accounting.
//!
//! Station-level aggregates are kept in raw tenths as integers. Conversion to
//! mm/°C happens once, so a fused mean is the correctly rounded value of the
//! exact rational mean and does not depend on station order.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{MonthValue, Unit, Variable, YearMonth};

/// Combine the raw values recorded for one station, day and variable:
/// sum for PRCP, min for TMIN, max for TMAX.
pub fn daily_aggregate(values: &[i64], variable: Variable) -> Result<i64> {
    let mut it = values.iter().copied();
    let first = it.next().ok_or(Error::Empty("daily values"))?;
    Ok(it.fold(first, |acc, v| combine(acc, v, variable)))
}

/// Binary form of the temporal operator; associative and commutative.
pub fn combine(a: i64, b: i64, variable: Variable) -> i64 {
    match variable {
        Variable::Prcp => a + b,
        Variable::Tmin => a.min(b),
        Variable::Tmax => a.max(b),
    }
}

/// Raw tenths to `target`.
pub fn convert_units(raw: i64, variable: Variable, target: Unit) -> Result<f64> {
    target.check_compatible(variable)?;
    let base = raw as f64 / 10.0;
    Ok(match target {
        Unit::Fahrenheit => celsius_to_fahrenheit(base),
        _ => base,
    })
}

pub fn celsius_to_fahrenheit(c: f64) -> f64 {
    c * 9.0 / 5.0 + 32.0
}

pub fn fahrenheit_to_celsius(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0
}

/// Minimum share of days a station-month needs before it counts as valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityRule {
    pub min_fraction: f64,
}

impl Default for ValidityRule {
    fn default() -> Self {
        ValidityRule { min_fraction: 0.7 }
    }
}

impl ValidityRule {
    /// `ceil(min_fraction * days)`: 22 of 31, 21 of 30, 20 of 28, 21 of 29.
    pub fn min_days(&self, days_in_month: u32) -> u32 {
        // Nudge down so 0.7 * 30 = 21.000000000000004 does not round up to 22.
        ((self.min_fraction * days_in_month as f64) - 1e-9).ceil().max(0.0) as u32
    }
}

/// One day's aggregate at one station, raw tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DailyAggregate {
    pub date: NaiveDate,
    pub raw: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMonth {
    pub station_id: String,
    pub year: i32,
    pub month: u32,
    pub variable: Variable,
    /// Monthly aggregate in raw tenths; `None` when the month is not valid.
    pub raw: Option<i64>,
    /// `raw` in the variable's base unit (mm or °C).
    pub value: MonthValue,
    pub observed_days: u32,
}

/// Aggregate one station-month of daily values. The month is missing when
/// fewer than `rule.min_days` distinct days were observed.
pub fn monthly_station_value(
    station_id: &str,
    month: YearMonth,
    variable: Variable,
    daily: &[DailyAggregate],
    rule: ValidityRule,
) -> StationMonth {
    let mut dates: Vec<NaiveDate> = daily.iter().map(|d| d.date).collect();
    debug_assert!(dates.iter().all(|d| d.year() == month.year && d.month() == month.month));
    dates.sort_unstable();
    dates.dedup();
    let observed_days = dates.len() as u32;
    let raw = if observed_days >= rule.min_days(month.days()) && observed_days > 0 {
        let values: Vec<i64> = daily.iter().map(|d| d.raw).collect();
        daily_aggregate(&values, variable).ok()
    } else {
        None
    };
    StationMonth {
        station_id: station_id.to_string(),
        year: month.year,
        month: month.month,
        variable,
        raw,
        value: raw.map(|r| r as f64 / 10.0).into(),
        observed_days,
    }
}

/// Spatial fusion: arithmetic mean over the valid station-months, in the base
/// unit. Missing when none is valid.
pub fn spatial_fuse(station_months: &[StationMonth]) -> MonthValue {
    let (sum, count) = station_months
        .iter()
        .filter_map(|s| s.raw)
        .fold((0i128, 0i128), |(s, c), v| (s + v as i128, c + 1));
    if count == 0 {
        MonthValue::Missing
    } else {
        MonthValue::Value(sum as f64 / (10 * count) as f64)
    }
}

/// A month-ordered series for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub variable: Variable,
    pub unit: Unit,
    pub start: YearMonth,
    pub values: Vec<MonthValue>,
    pub missing_rate: f64,
}

impl MonthlySeries {
    pub fn new(variable: Variable, unit: Unit, start: YearMonth, values: Vec<MonthValue>) -> Self {
        let missing_rate = rate(&values).unwrap_or(0.0);
        MonthlySeries {
            variable,
            unit,
            start,
            values,
            missing_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn months(&self) -> impl Iterator<Item = YearMonth> + '_ {
        std::iter::successors(Some(self.start), |m| Some(m.succ())).take(self.values.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = (YearMonth, MonthValue)> + '_ {
        self.months().zip(self.values.iter().copied())
    }

    /// Month after the last value.
    pub fn end(&self) -> YearMonth {
        self.months().last().map_or(self.start, YearMonth::succ)
    }

    pub fn get(&self, month: YearMonth) -> Option<MonthValue> {
        let offset = month.index() - self.start.index();
        usize::try_from(offset).ok().and_then(|i| self.values.get(i)).copied()
    }
}

fn rate(values: &[MonthValue]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let missing = values.iter().filter(|v| v.is_missing()).count();
    Some(missing as f64 / values.len() as f64)
}

/// Fraction of missing months.
pub fn missing_rate(series: &MonthlySeries) -> Result<f64> {
    rate(&series.values).ok_or(Error::Empty("series"))
}
