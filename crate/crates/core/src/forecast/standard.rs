use crate::aggregation::MonthlySeries;
use crate::error::{Error, Result};
use crate::types::{MonthValue, Variable, YearMonth};
use crate::view::{ArffDataset, StandardRow};

use super::lagged::{build_lagged_dataset, dense_inputs, impute_series, raw_features, LagConfig};
use super::{train, ForecastResult, Method, Mode, Model, Prediction, HORIZON};

/// Split standard-view rows into one series per variable, in base units.
/// Rows must be consecutive months.
pub fn series_from_rows(rows: &[StandardRow]) -> Result<Vec<MonthlySeries>> {
    let first = rows.first().ok_or(Error::Empty("standard view"))?;
    let start = YearMonth::new(first.year, first.month);
    let mut expect = start;
    for r in rows {
        if (r.year, r.month) != (expect.year, expect.month) {
            return Err(Error::malformed(format!(
                "standard view skips from {}-{} to {}-{}",
                expect.year, expect.month, r.year, r.month
            )));
        }
        expect = expect.succ();
    }
    Ok(Variable::ALL
        .into_iter()
        .map(|v| {
            let values: Vec<MonthValue> = rows.iter().map(|r| r.get(v)).collect();
            MonthlySeries::new(v, v.base_unit(), start, values)
        })
        .collect())
}

/// One trained model per input series; rolls every input forward together.
#[derive(Debug, Clone)]
pub struct Forecaster {
    pub models: Vec<Model>,
    pub inputs: Vec<Variable>,
    pub config: LagConfig,
    history: Vec<Vec<f64>>,
    next: YearMonth,
}

impl Forecaster {
    /// `inputs` must be imputed and aligned. Each input gets its own model
    /// over the lags of all inputs.
    pub fn fit(inputs: &[MonthlySeries], method: Method, seed: u64, config: LagConfig) -> Result<Self> {
        let history = dense_inputs(inputs)?;
        let models = (0..inputs.len())
            .map(|k| {
                let ds = build_lagged_dataset(inputs, k, config)?;
                train(method, &ds, seed.wrapping_add(k as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Forecaster {
            models,
            inputs: inputs.iter().map(|s| s.variable).collect(),
            config,
            history,
            next: inputs[0].end(),
        })
    }

    /// First month after the training data.
    pub fn next_month(&self) -> YearMonth {
        self.next
    }

    pub fn history(&self) -> &[Vec<f64>] {
        &self.history
    }

    /// Recursive forecast from an explicit history whose next month is
    /// `next`. Returns one vector of `steps` values per input.
    pub fn roll_from(&self, history: &[Vec<f64>], next: YearMonth, steps: usize) -> Result<Vec<Vec<f64>>> {
        let mut hist: Vec<Vec<f64>> = history.to_vec();
        let mut out = vec![Vec::with_capacity(steps); self.models.len()];
        let mut month = next;
        for _ in 0..steps {
            let t = hist[0].len();
            let views: Vec<&[f64]> = hist.iter().map(Vec::as_slice).collect();
            let raw = raw_features(&views, t, month.month, &self.config);
            let step: Vec<f64> = self
                .models
                .iter()
                .map(|m| m.predict_raw(&raw))
                .collect::<Result<_>>()?;
            for (k, v) in step.into_iter().enumerate() {
                hist[k].push(v);
                out[k].push(v);
            }
            month = month.succ();
        }
        Ok(out)
    }

    pub fn roll(&self, steps: usize) -> Result<Vec<Vec<f64>>> {
        self.roll_from(&self.history, self.next, steps)
    }
}

/// Forecast `target` for the twelve months after `series`. `series` holds the
/// three variables as produced by [`series_from_rows`]; gaps are imputed here.
pub fn forecast_series(
    series: &[MonthlySeries],
    mode: Mode,
    method: Method,
    target: Variable,
    seed: u64,
    config: LagConfig,
) -> Result<ForecastResult> {
    let pos = series
        .iter()
        .position(|s| s.variable == target)
        .ok_or_else(|| Error::InsufficientData(format!("no {target} series")))?;
    let inputs: Vec<MonthlySeries> = match mode {
        Mode::Univariate => vec![impute_series(&series[pos])?],
        Mode::Multivariate => series.iter().map(impute_series).collect::<Result<_>>()?,
        Mode::Nba => return Err(Error::malformed("neighbour-based mode needs a neighbour view")),
    };
    let target_pos = if mode == Mode::Univariate { 0 } else { pos };
    let forecaster = Forecaster::fit(&inputs, method, seed, config)?;
    let rolled = forecaster.roll(HORIZON)?;
    let months = std::iter::successors(Some(forecaster.next_month()), |m| Some(m.succ()));
    Ok(ForecastResult {
        mode,
        method,
        variable: target,
        unit: inputs[target_pos].unit,
        predictions: months
            .zip(&rolled[target_pos])
            .map(|(ym, &value)| Prediction {
                year: ym.year,
                month: ym.month,
                value,
            })
            .collect(),
        source_view: None,
        target_station: None,
        test_view: None,
        seed,
    })
}

pub fn forecast_standard(
    view: &ArffDataset,
    mode: Mode,
    method: Method,
    variable: Variable,
    seed: u64,
) -> Result<ForecastResult> {
    forecast_standard_with(view, mode, method, variable, seed, LagConfig::default())
}

pub fn forecast_standard_with(
    view: &ArffDataset,
    mode: Mode,
    method: Method,
    variable: Variable,
    seed: u64,
    config: LagConfig,
) -> Result<ForecastResult> {
    let ArffDataset::Standard { rows } = view else {
        return Err(Error::malformed(format!("expected a standard view, got {:?}", view.kind())));
    };
    forecast_series(&series_from_rows(rows)?, mode, method, variable, seed, config)
}
