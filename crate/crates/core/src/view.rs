//! ARFF minable views: the standard multivariate view, the neighbour-station
//! training view and the single-station test view.
//!
//! Only the ARFF constructs these files use are supported: `@relation`,
//! numeric attributes, one date attribute, `@data`, comma rows and `?`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Scope, StationMeta};
use crate::error::{Error, IoContext, Result};
use crate::store::{read_monthly_series, region_meta, DocumentStore};
use crate::types::{MonthValue, Unit, Variable};

pub const RELATION: &str = "weather-project";
pub const DATE_MASK: &str = "yyyy-MM-dd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    Standard,
    Neighbour,
    Test,
}

/// Descriptor of a written view file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinableView {
    pub kind: ViewKind,
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<Variable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
    pub from_year: i32,
    pub to_year: i32,
    pub sources: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub stations: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardRow {
    pub year: i32,
    pub month: u32,
    pub rainfall: MonthValue,
    pub tmin: MonthValue,
    pub tmax: MonthValue,
}

impl StandardRow {
    pub fn get(&self, variable: Variable) -> MonthValue {
        match variable {
            Variable::Prcp => self.rainfall,
            Variable::Tmin => self.tmin,
            Variable::Tmax => self.tmax,
        }
    }
}

/// Row of a neighbour or test view. Latitude and longitude are degrees × 10⁴,
/// altitude is whole metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighbourRow {
    pub year: i32,
    pub month: u32,
    pub value: MonthValue,
    pub latitude: f64,
    pub longitude: f64,
    pub altitude: MonthValue,
}

/// A parsed view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArffDataset {
    Standard {
        rows: Vec<StandardRow>,
    },
    Neighbour {
        /// Name of the value attribute (`rainfall`, `tmin`, `tmax`).
        attribute: String,
        rows: Vec<NeighbourRow>,
    },
    Test {
        attribute: String,
        rows: Vec<NeighbourRow>,
    },
}

impl ArffDataset {
    pub fn kind(&self) -> ViewKind {
        match self {
            ArffDataset::Standard { .. } => ViewKind::Standard,
            ArffDataset::Neighbour { .. } => ViewKind::Neighbour,
            ArffDataset::Test { .. } => ViewKind::Test,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ArffDataset::Standard { rows } => rows.len(),
            ArffDataset::Neighbour { rows, .. } | ArffDataset::Test { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn attribute_count(&self) -> usize {
        match self {
            ArffDataset::Standard { .. } => 4,
            _ => 6,
        }
    }

    /// Render to ARFF text.
    pub fn render(&self) -> String {
        match self {
            ArffDataset::Standard { rows } => render_standard(rows),
            ArffDataset::Neighbour { attribute, rows } | ArffDataset::Test { attribute, rows } => {
                render_neighbour(attribute, rows)
            }
        }
    }
}

fn render_standard(rows: &[StandardRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 6));
    writeln!(out, "@relation {RELATION}").unwrap();
    writeln!(out, "@attribute Date date '{DATE_MASK}'").unwrap();
    for v in Variable::ALL {
        writeln!(out, "@attribute {} numeric", v.view_name()).unwrap();
    }
    out.push_str("@data\n");
    for r in rows {
        // Month deliberately unpadded, day fixed at 01.
        writeln!(out, "{}-{}-01,{},{},{}", r.year, r.month, r.rainfall, r.tmin, r.tmax).unwrap();
    }
    out
}

fn render_neighbour(attribute: &str, rows: &[NeighbourRow]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 8));
    writeln!(out, "@relation {RELATION}").unwrap();
    for name in ["year", "month", attribute, "latitude", "longitude", "altitude"] {
        writeln!(out, "@attribute {name} numeric").unwrap();
    }
    out.push_str("@data\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.year, r.month, r.value, r.latitude, r.longitude, r.altitude
        )
        .unwrap();
    }
    out
}

fn write_file(out: &Path, text: &str) -> Result<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).at(parent)?;
    }
    fs::write(out, text).at(out)
}

/// Spatially fused rainfall (mm), tmin and tmax (°C) for every month of
/// `from..=to`.
pub fn standard_rows(store: &dyn DocumentStore, db: &str, from: i32, to: i32) -> Result<Vec<StandardRow>> {
    let series: Vec<_> = Variable::ALL
        .into_iter()
        .map(|v| read_monthly_series(store, db, v, v.base_unit(), from, to))
        .collect::<Result<_>>()?;
    Ok(series[0]
        .iter()
        .zip(series[1].values.iter().zip(&series[2].values))
        .map(|((ym, rainfall), (tmin, tmax))| StandardRow {
            year: ym.year,
            month: ym.month,
            rainfall,
            tmin: *tmin,
            tmax: *tmax,
        })
        .collect())
}

pub fn write_standard_view(
    store: &dyn DocumentStore,
    db: &str,
    from: i32,
    to: i32,
    out: &Path,
) -> Result<MinableView> {
    let rows = standard_rows(store, db, from, to)?;
    write_file(out, &render_standard(&rows))?;
    Ok(MinableView {
        kind: ViewKind::Standard,
        path: out.to_path_buf(),
        variable: None,
        unit: None,
        from_year: from,
        to_year: to,
        sources: vec![db.to_string()],
        stations: Vec::new(),
        rows: rows.len(),
    })
}

/// Latitude or longitude in the integer ×10⁴ encoding.
pub fn encode_degrees(deg: f64) -> f64 {
    (deg * 1e4).round()
}

fn encode_altitude(elevation: Option<f64>) -> MonthValue {
    elevation.map(f64::round).into()
}

pub fn neighbour_rows(
    store: &dyn DocumentStore,
    catalog: &Catalog,
    stations: &[String],
    variable: Variable,
    unit: Unit,
    from: i32,
    to: i32,
) -> Result<Vec<NeighbourRow>> {
    if stations.is_empty() {
        return Err(Error::EmptyStationList);
    }
    unit.check_compatible(variable)?;
    let mut rows = Vec::with_capacity(stations.len() * 12 * (to - from + 1).max(0) as usize);
    for db in stations {
        let meta = region_meta(store, db)?;
        let Scope::Station(id) = &meta.scope else {
            return Err(Error::UnknownScope(format!("{db} is not a station database")));
        };
        let station = catalog.station(id)?;
        let series = read_monthly_series(store, db, variable, unit, from, to)?;
        rows.extend(series.iter().map(|(ym, value)| NeighbourRow {
            year: ym.year,
            month: ym.month,
            value,
            latitude: encode_degrees(station.latitude),
            longitude: encode_degrees(station.longitude),
            altitude: encode_altitude(station.elevation),
        }));
    }
    Ok(rows)
}

/// One row per month and station, grouped by station in the order given.
pub fn write_neighbour_view(
    store: &dyn DocumentStore,
    catalog: &Catalog,
    stations: &[String],
    variable: Variable,
    unit: Unit,
    from: i32,
    to: i32,
    out: &Path,
) -> Result<MinableView> {
    let rows = neighbour_rows(store, catalog, stations, variable, unit, from, to)?;
    write_file(out, &render_neighbour(variable.view_name(), &rows))?;
    Ok(MinableView {
        kind: ViewKind::Neighbour,
        path: out.to_path_buf(),
        variable: Some(variable),
        unit: Some(unit),
        from_year: from,
        to_year: to,
        sources: stations.to_vec(),
        stations: stations.to_vec(),
        rows: rows.len(),
    })
}

pub fn test_rows(target: &StationMeta, test_year: i32) -> Vec<NeighbourRow> {
    (1..=12)
        .map(|month| NeighbourRow {
            year: test_year,
            month,
            value: MonthValue::Missing,
            latitude: encode_degrees(target.latitude),
            longitude: encode_degrees(target.longitude),
            altitude: encode_altitude(target.elevation),
        })
        .collect()
}

/// Twelve `?` rows for `test_year` at the target station's coordinates.
pub fn write_test_view(target: &StationMeta, variable: Variable, test_year: i32, out: &Path) -> Result<MinableView> {
    let rows = test_rows(target, test_year);
    write_file(out, &render_neighbour(variable.view_name(), &rows))?;
    Ok(MinableView {
        kind: ViewKind::Test,
        path: out.to_path_buf(),
        variable: Some(variable),
        unit: None,
        from_year: test_year,
        to_year: test_year,
        sources: vec![target.station_id.clone()],
        stations: vec![target.station_id.clone()],
        rows: rows.len(),
    })
}

pub fn read_view(path: &Path) -> Result<ArffDataset> {
    let text = fs::read_to_string(path).at(path)?;
    parse_view(&text).map_err(|e| match e {
        Error::Malformed(m) => Error::Malformed(format!("{}: {m}", path.display())),
        e => e,
    })
}

#[derive(Debug)]
struct Attribute {
    name: String,
    kind: String,
}

fn parse_attribute(rest: &str) -> Result<Attribute> {
    let rest = rest.trim();
    let (name, kind) = if let Some(stripped) = rest.strip_prefix('\'') {
        let end = stripped
            .find('\'')
            .ok_or_else(|| Error::malformed("unterminated quoted attribute name"))?;
        (&stripped[..end], stripped[end + 1..].trim())
    } else {
        rest.split_once(char::is_whitespace)
            .map(|(n, k)| (n, k.trim()))
            .ok_or_else(|| Error::malformed(format!("attribute without type: {rest:?}")))?
    };
    Ok(Attribute {
        name: name.to_string(),
        kind: kind.to_string(),
    })
}

fn parse_value(field: &str) -> Result<MonthValue> {
    let field = field.trim();
    if field == "?" {
        return Ok(MonthValue::Missing);
    }
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(MonthValue::Value)
        .ok_or_else(|| Error::malformed(format!("not a number: {field:?}")))
}

fn parse_int<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    let field = field.trim();
    field
        .parse::<T>()
        .ok()
        .or_else(|| {
            // Accept integral floats such as `2016.0`.
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0)
                .and_then(|v| format!("{v}").parse().ok())
        })
        .ok_or_else(|| Error::malformed(format!("{what} {field:?} is not an integer")))
}

/// `yyyy-M-dd` or `yyyy-MM-dd`.
fn parse_date(field: &str) -> Result<(i32, u32)> {
    let field = field.trim().trim_matches('\'').trim_matches('"');
    let parts: Vec<&str> = field.split('-').collect();
    let [y, m, d] = parts.as_slice() else {
        return Err(Error::malformed(format!("date {field:?}")));
    };
    let year: i32 = parse_int(y, "year")?;
    let month: u32 = parse_int(m, "month")?;
    let day: u32 = parse_int(d, "day")?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return Err(Error::malformed(format!("date {field:?}")));
    }
    Ok((year, month))
}

fn check_month(month: u32) -> Result<u32> {
    if (1..=12).contains(&month) {
        Ok(month)
    } else {
        Err(Error::malformed(format!("month {month} out of range")))
    }
}

/// Parse ARFF text into one of the three layouts, detected from the
/// attribute list. A neighbour-layout file whose value column is entirely
/// `?` is a test view.
pub fn parse_view(text: &str) -> Result<ArffDataset> {
    let mut attrs = Vec::new();
    let mut lines = text.lines().enumerate();
    let mut saw_relation = false;
    let mut saw_data = false;
    for (_, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            saw_relation = true;
        } else if let Some(rest) = lower.strip_prefix("@attribute") {
            let _ = rest;
            attrs.push(parse_attribute(&line["@attribute".len()..])?);
        } else if lower == "@data" {
            saw_data = true;
            break;
        } else {
            return Err(Error::malformed(format!("unexpected header line {line:?}")));
        }
    }
    if !saw_relation || !saw_data {
        return Err(Error::malformed("missing @relation or @data"));
    }
    let names: Vec<String> = attrs.iter().map(|a| a.name.to_ascii_lowercase()).collect();
    let numeric = |i: usize| attrs[i].kind.eq_ignore_ascii_case("numeric") || attrs[i].kind.eq_ignore_ascii_case("real");
    let rows_iter = lines.filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('%')).then_some((i + 1, l))
    });

    let standard = names.len() == 4
        && names[0] == "date"
        && attrs[0].kind.to_ascii_lowercase().starts_with("date")
        && names[1..] == ["rainfall", "tmin", "tmax"]
        && (1..4).all(numeric);
    if standard {
        let mut rows = Vec::new();
        for (lineno, line) in rows_iter {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::malformed(format!("line {lineno}: expected 4 fields")));
            }
            let (year, month) = parse_date(f[0])?;
            rows.push(StandardRow {
                year,
                month,
                rainfall: parse_value(f[1])?,
                tmin: parse_value(f[2])?,
                tmax: parse_value(f[3])?,
            });
        }
        return Ok(ArffDataset::Standard { rows });
    }

    let neighbour = names.len() == 6
        && names[0] == "year"
        && names[1] == "month"
        && ["rainfall", "tmin", "tmax"].contains(&names[2].as_str())
        && names[3..] == ["latitude", "longitude", "altitude"]
        && (0..6).all(numeric);
    if !neighbour {
        return Err(Error::malformed(format!("unrecognised attribute list {names:?}")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in rows_iter {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::malformed(format!("line {lineno}: expected 6 fields")));
        }
        let coord = |s: &str| -> Result<f64> {
            parse_value(s)?
                .value()
                .ok_or_else(|| Error::malformed(format!("line {lineno}: missing coordinate")))
        };
        rows.push(NeighbourRow {
            year: parse_int(f[0], "year")?,
            month: check_month(parse_int(f[1], "month")?)?,
            value: parse_value(f[2])?,
            latitude: coord(f[3])?,
            longitude: coord(f[4])?,
            altitude: parse_value(f[5])?,
        });
    }
    let attribute = attrs[2].name.clone();
    if !rows.is_empty() && rows.iter().all(|r| r.value.is_missing()) {
        Ok(ArffDataset::Test { attribute, rows })
    } else {
        Ok(ArffDataset::Neighbour { attribute, rows })
    }
}
