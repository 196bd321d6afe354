use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{read_docs, replace_docs, DailyAggDoc, DocumentStore, MonthlyFusedDoc, WorldDoc, WORLD_DB};
use crate::aggregation::{
    celsius_to_fahrenheit, combine, monthly_station_value, spatial_fuse, DailyAggregate,
    MonthlySeries, ValidityRule,
};
use crate::catalog::{Catalog, Scope};
use crate::error::{Error, Result};
use crate::ingest::parse_yyyymmdd;
use crate::types::{MonthValue, Unit, Variable, YearMonth};

/// Metadata stored with a particular-region database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMeta {
    pub scope: Scope,
    /// Station ids covered, sorted.
    pub stations: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateOptions {
    /// Drop and recreate an existing database instead of failing with `E_EXISTS`.
    pub overwrite: bool,
    /// Reject scopes that resolve to zero stations.
    pub strict: bool,
}

pub fn region_meta(store: &dyn DocumentStore, db: &str) -> Result<RegionMeta> {
    let meta = store.database_meta(db)?;
    serde_json::from_value(meta).map_err(|_| Error::UnknownScope(format!("{db} is not a region database")))
}

/// Create an empty particular-region database named after the scope, holding
/// `total_p`, `total_tmax` and `total_tmin`. Returns the database name.
pub fn create_region_store(
    store: &dyn DocumentStore,
    catalog: &Catalog,
    scope: &Scope,
    opts: CreateOptions,
) -> Result<String> {
    let stations: Vec<String> = catalog
        .stations_in_scope(scope, opts.strict)?
        .into_iter()
        .map(|s| s.station_id.clone())
        .collect();
    let name = catalog.database_name(scope)?;
    if name.eq_ignore_ascii_case(WORLD_DB) {
        return Err(Error::Exists(format!("{name} is reserved")));
    }
    let _guard = store.lock_writer(&name)?;
    if store.database_exists(&name) {
        if !opts.overwrite {
            return Err(Error::Exists(format!("database {name}")));
        }
        store.drop_database(&name)?;
    }
    let meta = RegionMeta {
        scope: scope.clone(),
        stations,
    };
    store.create_database(&name, &serde_json::to_value(&meta).expect("meta serialises"))?;
    for v in Variable::ALL {
        store.replace_collection(&name, v.total_collection(), &mut std::iter::empty())?;
    }
    Ok(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLoad {
    pub variable: Variable,
    pub daily_collection: String,
    pub daily_docs: u64,
    pub monthly_docs: u64,
    pub missing_months: u32,
    /// Negative PRCP day sums clamped to zero.
    pub clamped_negative: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub database: String,
    pub year: i32,
    pub world_docs_scanned: u64,
    pub in_scope_docs: u64,
    pub variables: Vec<VariableLoad>,
}

type DailyKey = (Variable, String, chrono::NaiveDate);

/// Aggregate one world-database year into a region database: daily
/// collections `<year>`, `<year>TMAX`, `<year>TMIN`, plus twelve fused
/// documents per `total_*` collection (replacing any earlier load of the year).
pub fn load_region_year(
    store: &dyn DocumentStore,
    db: &str,
    year: i32,
    rule: ValidityRule,
    progress: &mut dyn FnMut(u8),
) -> Result<LoadSummary> {
    let meta = region_meta(store, db)?;
    let _guard = store.lock_writer(db)?;
    let world_year = year.to_string();
    let total = match store.count(WORLD_DB, &world_year) {
        Ok(Some(n)) => n,
        Ok(None) | Err(Error::UnknownScope(_)) => {
            return Err(Error::MissingYear {
                database: WORLD_DB.into(),
                year,
            })
        }
        Err(e) => return Err(e),
    };
    progress(0);

    let in_scope: HashSet<&str> = meta.stations.iter().map(String::as_str).collect();
    let mut daily: BTreeMap<DailyKey, i64> = BTreeMap::new();
    let (mut scanned, mut kept) = (0u64, 0u64);
    let mut last_pct = 0u8;
    store.scan(WORLD_DB, &world_year, &mut |line| {
        scanned += 1;
        let pct = ((scanned * 80) / total.max(1)) as u8;
        if pct > last_pct {
            last_pct = pct;
            progress(pct);
        }
        let doc: WorldDoc = serde_json::from_str(line)
            .map_err(|e| Error::malformed(format!("{WORLD_DB}/{world_year}: {e}")))?;
        if !in_scope.contains(doc.station_id.as_str()) {
            return Ok(());
        }
        let Some(variable) = crate::types::Element::parse(&doc.element)?.variable() else {
            return Ok(());
        };
        let date = parse_yyyymmdd(&doc.date)?;
        kept += 1;
        daily
            .entry((variable, doc.station_id, date))
            .and_modify(|acc| *acc = combine(*acc, doc.value as i64, variable))
            .or_insert(doc.value as i64);
        Ok(())
    })?;

    let mut variables = Vec::new();
    for (step, variable) in Variable::ALL.into_iter().enumerate() {
        let mut clamped = 0u64;
        let mut per_station: HashMap<&str, Vec<DailyAggregate>> = HashMap::new();
        for ((v, station, date), raw) in daily.range((variable, String::new(), chrono::NaiveDate::MIN)..) {
            if *v != variable {
                break;
            }
            let mut raw = *raw;
            if variable == Variable::Prcp && raw < 0 {
                raw = 0;
                clamped += 1;
            }
            per_station
                .entry(station.as_str())
                .or_default()
                .push(DailyAggregate { date: *date, raw });
        }

        let daily_coll = variable.daily_collection(year);
        let mut stations_sorted: Vec<&&str> = per_station.keys().collect();
        stations_sorted.sort();
        let daily_docs = stations_sorted.iter().flat_map(|s| {
            per_station[**s].iter().map(move |d| DailyAggDoc {
                station_id: s.to_string(),
                date: DailyAggDoc::iso_date(d.date),
                value: d.raw as f64 / 10.0,
            })
        });
        let daily_count = replace_docs(store, db, &daily_coll, daily_docs)?;

        let fused = fuse_year(&meta.stations, &per_station, year, variable, rule);
        let missing = fused.iter().filter(|v| v.is_missing()).count() as u32;
        let new_docs = fused.iter().enumerate().map(|(i, value)| MonthlyFusedDoc {
            year,
            month: i as u32 + 1,
            value: *value,
            unit: variable.base_unit(),
            value_f: variable.is_temperature().then(|| value.map(celsius_to_fahrenheit)),
        });

        let coll = variable.total_collection();
        let mut docs: Vec<MonthlyFusedDoc> = read_docs::<MonthlyFusedDoc>(store, db, coll)?
            .into_iter()
            .filter(|d| d.year != year)
            .chain(new_docs)
            .collect();
        docs.sort_by_key(|d| (d.year, d.month));
        replace_docs(store, db, coll, docs)?;

        progress(80 + 20 * (step as u8 + 1) / 3);
        variables.push(VariableLoad {
            variable,
            daily_collection: daily_coll,
            daily_docs: daily_count,
            monthly_docs: 12,
            missing_months: missing,
            clamped_negative: clamped,
        });
    }

    Ok(LoadSummary {
        database: db.to_string(),
        year,
        world_docs_scanned: scanned,
        in_scope_docs: kept,
        variables,
    })
}

/// Twelve fused monthly values, in station-id order.
fn fuse_year(
    stations: &[String],
    per_station: &HashMap<&str, Vec<DailyAggregate>>,
    year: i32,
    variable: Variable,
    rule: ValidityRule,
) -> Vec<MonthValue> {
    (1..=12)
        .map(|month| {
            let ym = YearMonth::new(year, month);
            let months: Vec<_> = stations
                .iter()
                .map(|s| {
                    let days: Vec<DailyAggregate> = per_station
                        .get(s.as_str())
                        .map(|d| d.iter().filter(|d| d.date.month() == month).copied().collect())
                        .unwrap_or_default();
                    monthly_station_value(s, ym, variable, &days, rule)
                })
                .collect();
            spatial_fuse(&months)
        })
        .collect()
}

/// Month-ordered fused series for `from..=to` (inclusive years).
pub fn read_monthly_series(
    store: &dyn DocumentStore,
    db: &str,
    variable: Variable,
    unit: Unit,
    from: i32,
    to: i32,
) -> Result<MonthlySeries> {
    unit.check_compatible(variable)?;
    if from > to {
        return Err(Error::malformed(format!("year range {from}..{to} is empty")));
    }
    let docs: Vec<MonthlyFusedDoc> = read_docs(store, db, variable.total_collection())?;
    let by_month: HashMap<(i32, u32), &MonthlyFusedDoc> =
        docs.iter().map(|d| ((d.year, d.month), d)).collect();
    let mut values = Vec::with_capacity(12 * (to - from + 1) as usize);
    for year in from..=to {
        for month in 1..=12 {
            let doc = by_month.get(&(year, month)).ok_or_else(|| Error::MissingYear {
                database: db.to_string(),
                year,
            })?;
            values.push(match unit {
                Unit::Fahrenheit => doc.value_f.unwrap_or_else(|| doc.value.map(celsius_to_fahrenheit)),
                _ => doc.value,
            });
        }
    }
    Ok(MonthlySeries::new(variable, unit, YearMonth::new(from, 1), values))
}
