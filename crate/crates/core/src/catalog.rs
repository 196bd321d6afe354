//! Directory of regions, countries and stations, loaded once from the GHCN
//! stations file and the packaged country table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::ingest::parse_station_line;

/// Packaged `country_code,country_name,region` table.
pub const DEFAULT_COUNTRY_TABLE: &str = include_str!("../data/countries.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Country {
    pub code: String,
    pub name: String,
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    pub station_id: String,
    pub name: String,
    pub country_code: String,
    pub country_name: String,
    pub region: String,
    pub latitude: f64,
    pub longitude: f64,
    pub elevation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    Station,
    Country,
    Region,
}

/// What a particular-region database covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Scope {
    Station(String),
    Country(String),
    Region(String),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Station(id) => write!(f, "station {id}"),
            Scope::Country(c) => write!(f, "country {c}"),
            Scope::Region(r) => write!(f, "region {r}"),
        }
    }
}

#[derive(Debug, Deserialize)]
struct CountryRow {
    country_code: String,
    country_name: String,
    region: String,
}

/// Immutable after load; share behind an `Arc`.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    stations: BTreeMap<String, StationMeta>,
    countries: BTreeMap<String, Country>,
    regions: BTreeSet<String>,
    by_country: BTreeMap<String, Vec<String>>,
}

/// Load the catalog from a stations file and an optional country table
/// (the packaged table is used when `country_map` is `None`).
pub fn load_catalog(stations_file: &Path, country_map: Option<&Path>) -> Result<Catalog> {
    let stations = BufReader::new(File::open(stations_file).at(stations_file)?);
    match country_map {
        Some(path) => Catalog::from_readers(stations, File::open(path).at(path)?),
        None => Catalog::from_readers(stations, DEFAULT_COUNTRY_TABLE.as_bytes()),
    }
}

impl Catalog {
    pub fn from_readers(stations: impl BufRead, country_table: impl Read) -> Result<Self> {
        let mut catalog = Catalog::default();
        let mut rdr = csv::Reader::from_reader(country_table);
        for row in rdr.deserialize::<CountryRow>() {
            let row = row.map_err(|e| Error::malformed(format!("country table: {e}")))?;
            if row.country_code.len() != 2 {
                return Err(Error::malformed(format!("country code {:?}", row.country_code)));
            }
            catalog.regions.insert(row.region.clone());
            let code = row.country_code.clone();
            let prev = catalog.countries.insert(
                code.clone(),
                Country {
                    code: row.country_code,
                    name: row.country_name,
                    region: row.region,
                },
            );
            if prev.is_some() {
                return Err(Error::malformed(format!("duplicate country code {code}")));
            }
        }

        for line in stations.lines() {
            let line = line.map_err(|e| Error::malformed(format!("stations file: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = parse_station_line(&line)?;
            let prefix = rec.station_id[..2].to_string();
            let country = catalog
                .countries
                .get(&prefix)
                .ok_or_else(|| Error::UnknownCountry {
                    station: rec.station_id.clone(),
                    prefix: prefix.clone(),
                })?;
            let meta = StationMeta {
                station_id: rec.station_id.clone(),
                name: rec.name,
                country_code: prefix.clone(),
                country_name: country.name.clone(),
                region: country.region.clone(),
                latitude: rec.latitude,
                longitude: rec.longitude,
                elevation: rec.elevation,
            };
            if catalog.stations.insert(rec.station_id.clone(), meta).is_some() {
                return Err(Error::malformed(format!("duplicate station id {}", rec.station_id)));
            }
            catalog.by_country.entry(prefix).or_default().push(rec.station_id);
        }
        Ok(catalog)
    }

    pub fn station(&self, id: &str) -> Result<&StationMeta> {
        self.stations
            .get(id)
            .ok_or_else(|| Error::UnknownScope(format!("station {id}")))
    }

    pub fn stations(&self) -> impl Iterator<Item = &StationMeta> {
        self.stations.values()
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn countries(&self) -> impl Iterator<Item = &Country> {
        self.countries.values()
    }

    pub fn regions(&self) -> Vec<Region> {
        self.regions.iter().map(|name| Region { name: name.clone() }).collect()
    }

    /// Look up a country by code (`JO`) or name (`Jordan`, case-insensitive).
    pub fn country(&self, key: &str) -> Result<&Country> {
        if let Some(c) = self.countries.get(&key.to_ascii_uppercase()) {
            return Ok(c);
        }
        self.countries
            .values()
            .find(|c| c.name.eq_ignore_ascii_case(key))
            .ok_or_else(|| Error::UnknownScope(format!("country {key}")))
    }

    fn region_name(&self, key: &str) -> Result<&str> {
        self.regions
            .iter()
            .find(|r| r.eq_ignore_ascii_case(key))
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownScope(format!("region {key}")))
    }

    /// Canonicalise a scope: country keys become codes, region names take the
    /// table's spelling. Fails for anything not in the catalog.
    pub fn resolve(&self, kind: ScopeKind, key: &str) -> Result<Scope> {
        Ok(match kind {
            ScopeKind::Station => Scope::Station(self.station(key)?.station_id.clone()),
            ScopeKind::Country => Scope::Country(self.country(key)?.code.clone()),
            ScopeKind::Region => Scope::Region(self.region_name(key)?.to_string()),
        })
    }

    /// Guess the scope kind: a station id, then a country code or name, then a region.
    pub fn resolve_any(&self, key: &str) -> Result<Scope> {
        self.resolve(ScopeKind::Station, key)
            .or_else(|_| self.resolve(ScopeKind::Country, key))
            .or_else(|_| self.resolve(ScopeKind::Region, key))
            .map_err(|_| Error::UnknownScope(key.to_string()))
    }

    /// Name of the database created for `scope`: the station id, the country
    /// name, or the region name.
    pub fn database_name(&self, scope: &Scope) -> Result<String> {
        Ok(match scope {
            Scope::Station(id) => self.station(id)?.station_id.clone(),
            Scope::Country(code) => self.country(code)?.name.clone(),
            Scope::Region(name) => self.region_name(name)?.to_string(),
        })
    }

    /// Stations covered by `scope`, ordered by id. With `strict`, a known scope
    /// that contains no stations is reported as `E_UNKNOWN_SCOPE`.
    pub fn stations_in_scope(&self, scope: &Scope, strict: bool) -> Result<Vec<&StationMeta>> {
        let found: Vec<&StationMeta> = match scope {
            Scope::Station(id) => vec![self.station(id)?],
            Scope::Country(key) => {
                let code = &self.country(key)?.code;
                self.by_country
                    .get(code)
                    .into_iter()
                    .flatten()
                    .map(|id| &self.stations[id])
                    .collect()
            }
            Scope::Region(key) => {
                let region = self.region_name(key)?;
                self.stations.values().filter(|s| s.region == region).collect()
            }
        };
        if strict && found.is_empty() {
            return Err(Error::UnknownScope(format!("{scope} has no stations")));
        }
        let mut found = found;
        found.sort_by(|a, b| a.station_id.cmp(&b.station_id));
        Ok(found)
    }

    /// External map link for a station.
    pub fn station_map_link(&self, station_id: &str) -> Result<String> {
        let s = self.station(station_id)?;
        Ok(map_link(s.latitude, s.longitude))
    }
}

pub fn map_link(latitude: f64, longitude: f64) -> String {
    format!("https://www.google.com/maps?q={latitude},{longitude}")
}
