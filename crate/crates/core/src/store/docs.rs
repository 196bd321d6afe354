use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::types::{MonthValue, Unit};

/// One retained by-year row in the world database. Values stay in raw tenths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldDoc {
    pub station_id: String,
    /// `YYYYMMDD`
    pub date: String,
    pub element: String,
    pub value: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_time: Option<String>,
}

/// Daily aggregate in a region database; `value` in mm or °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyAggDoc {
    pub station_id: String,
    /// `yyyy-mm-ddT00:00:00.000Z`
    pub date: String,
    pub value: f64,
}

impl DailyAggDoc {
    pub fn iso_date(date: NaiveDate) -> String {
        format!("{}T00:00:00.000Z", date.format("%Y-%m-%d"))
    }
}

/// One fused month in `total_p`, `total_tmin` or `total_tmax`.
///
/// Temperature documents carry the °C value in `value` and the °F value in
/// `value_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyFusedDoc {
    pub year: i32,
    pub month: u32,
    pub value: MonthValue,
    pub unit: Unit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_f: Option<MonthValue>,
}
