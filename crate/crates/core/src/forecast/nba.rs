use std::path::Path;
use std::str::FromStr;

use crate::catalog::StationMeta;
use crate::error::{Error, Result};
use crate::types::{Unit, Variable};
use crate::view::{test_rows, write_test_view, ArffDataset, NeighbourRow};

use super::tree::{BaggedTrees, BaggingParams};
use super::{ForecastResult, Method, Mode, Prediction};

pub const MIN_TRAINING_ROWS: usize = 10;

fn features(r: &NeighbourRow) -> Option<Vec<f64>> {
    Some(vec![
        r.year as f64,
        r.month as f64,
        r.latitude,
        r.longitude,
        r.altitude.value()?,
    ])
}

/// Usable (features, value) pairs: rows with a missing value or altitude are
/// dropped.
pub fn nba_training_rows(rows: &[NeighbourRow]) -> (Vec<Vec<f64>>, Vec<f64>) {
    rows.iter()
        .filter_map(|r| Some((features(r)?, r.value.value()?)))
        .unzip()
}

/// Bagged trees over (year, month, latitude, longitude, altitude) of the
/// neighbour rows, evaluated on twelve test rows at the target station for
/// the year after the training range. Writes the test view when `test_view`
/// is given.
pub fn forecast_nba(
    training: &ArffDataset,
    target: &StationMeta,
    unit: Unit,
    seed: u64,
    params: BaggingParams,
    test_view: Option<&Path>,
) -> Result<ForecastResult> {
    let ArffDataset::Neighbour { attribute, rows } = training else {
        return Err(Error::malformed(format!("expected a neighbour view, got {:?}", training.kind())));
    };
    let variable = Variable::from_str(attribute)?;
    unit.check_compatible(variable)?;
    if target.elevation.is_none() {
        return Err(Error::InsufficientData(format!("station {} has no altitude", target.station_id)));
    }
    let (x, y) = nba_training_rows(rows);
    if x.len() < MIN_TRAINING_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} usable training rows, need at least {MIN_TRAINING_ROWS}",
            x.len()
        )));
    }
    let test_year = rows.iter().map(|r| r.year).max().unwrap_or_default() + 1;
    if let Some(path) = test_view {
        write_test_view(target, variable, test_year, path)?;
    }
    let ensemble = BaggedTrees::fit(&x, &y, params, seed);
    let predictions = test_rows(target, test_year)
        .iter()
        .map(|r| {
            let f = features(r).expect("target altitude checked above");
            Prediction {
                year: r.year,
                month: r.month,
                value: ensemble.predict(&f),
            }
        })
        .collect();
    Ok(ForecastResult {
        mode: Mode::Nba,
        method: Method::Bagging,
        variable,
        unit,
        predictions,
        source_view: None,
        target_station: Some(target.station_id.clone()),
        test_view: test_view.map(|p| p.display().to_string()),
        seed,
    })
}
