//! Deterministic synthetic GHCN-format worlds: station lists and by-year
//! daily records with injected gaps, flagged rows and duplicates. Used by the
//! test oracles, the benches and the shipped offline excerpt.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{IoContext, Result};
use crate::ingest::{format_station_line, RawObservation, StationRecord};
use crate::types::Element;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStation {
    pub id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub elevation: Option<f64>,
    pub name: String,
}

impl SyntheticStation {
    pub fn new(id: &str, latitude: f64, longitude: f64, elevation: Option<f64>, name: &str) -> Self {
        SyntheticStation {
            id: id.to_string(),
            latitude,
            longitude,
            elevation,
            name: name.to_string(),
        }
    }

    pub fn record(&self) -> StationRecord {
        StationRecord {
            station_id: self.id.clone(),
            latitude: self.latitude,
            longitude: self.longitude,
            elevation: self.elevation,
            name: self.name.clone(),
        }
    }
}

/// Five stations with Jordanian identifiers and coordinates.
pub fn jordan_stations() -> Vec<SyntheticStation> {
    vec![
        SyntheticStation::new("JOM00040270", 31.983, 35.983, Some(779.0), "AMMAN AIRPORT"),
        SyntheticStation::new("JOM00040265", 32.367, 36.250, Some(683.0), "MAFRAQ"),
        SyntheticStation::new("JOM00040310", 30.167, 35.783, Some(1069.0), "MAAN"),
        SyntheticStation::new("JOM00040340", 29.633, 35.017, Some(51.0), "AQABA AIRPORT"),
        SyntheticStation::new("JO000040255", 32.550, 35.850, Some(616.0), "IRBID"),
    ]
}

/// Filler stations from other countries so that scoping has work to do.
pub fn filler_stations(count: usize, seed: u64) -> Vec<SyntheticStation> {
    const PREFIXES: [(&str, f64, f64); 6] = [
        ("SP", 40.0, -3.7),
        ("IS", 31.5, 34.9),
        ("SY", 34.8, 38.9),
        ("LE", 33.9, 35.8),
        ("SA", 24.7, 46.7),
        ("IZ", 33.3, 44.4),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (prefix, lat, lon) = PREFIXES[i % PREFIXES.len()];
            SyntheticStation::new(
                &format!("{prefix}{:09}", 100_000 + i),
                lat + rng.random_range(-1.5..1.5),
                lon + rng.random_range(-1.5..1.5),
                Some(rng.random_range(0.0..1500.0f64).round()),
                &format!("SYNTHETIC {prefix} {i}"),
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub stations: Vec<SyntheticStation>,
    pub first_year: i32,
    pub last_year: i32,
    /// Chance of dropping any single daily reading.
    pub day_gap_rate: f64,
    /// Chance that a station-month-element is thinned to between 55% and
    /// 100% of its days, straddling the validity threshold.
    pub month_gap_rate: f64,
    /// Chance of a station-month-element being entirely absent.
    pub month_drop_rate: f64,
    /// Chance of an extra quality-flagged row next to a reading.
    pub flagged_rate: f64,
    /// Chance of a second reading for the same station, day and element.
    pub duplicate_rate: f64,
    /// Chance of an unrelated element (SNWD) row per station-day.
    pub other_element_rate: f64,
    pub seed: u64,
}

impl WorldConfig {
    pub fn new(stations: Vec<SyntheticStation>, first_year: i32, last_year: i32, seed: u64) -> Self {
        WorldConfig {
            stations,
            first_year,
            last_year,
            day_gap_rate: 0.03,
            month_gap_rate: 0.2,
            month_drop_rate: 0.03,
            flagged_rate: 0.01,
            duplicate_rate: 0.01,
            other_element_rate: 0.05,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub stations: Vec<SyntheticStation>,
    /// Sorted by date, then station, then element.
    pub observations: Vec<RawObservation>,
}

fn days_in(year: i32, month: u32) -> Vec<NaiveDate> {
    let first = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
    first.iter_days().take_while(|d| d.month() == month).collect()
}

fn reading(id: &str, date: NaiveDate, element: Element, value: i32, q_flag: Option<char>) -> RawObservation {
    RawObservation {
        station_id: id.to_string(),
        date,
        element,
        value,
        m_flag: None,
        q_flag,
        s_flag: Some('S'),
        obs_time: None,
    }
}

/// Daily weather: a seasonal cycle, a lapse with altitude and noise.
fn daily_values(station: &SyntheticStation, date: NaiveDate, rng: &mut ChaCha8Rng, noise: &Normal<f64>) -> [i32; 3] {
    let doy = date.ordinal() as f64;
    let season = (2.0 * PI * (doy - 105.0) / 365.25).sin();
    let alt = station.elevation.unwrap_or(0.0);
    let tmax = 24.0 + 9.0 * season - 0.0065 * alt + noise.sample(rng);
    let tmin = tmax - 8.0 - rng.random_range(0.0..6.0);
    let wet = rng.random_bool((0.25 - 0.2 * season).clamp(0.02, 0.6));
    let prcp = if wet { rng.random_range(1..400) } else { 0 };
    [prcp, (tmin * 10.0).round() as i32, (tmax * 10.0).round() as i32]
}

pub fn generate_world(cfg: &WorldConfig) -> SyntheticWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, 2.0).unwrap();
    let elements = [Element::Prcp, Element::Tmin, Element::Tmax];
    let mut observations = Vec::new();
    for year in cfg.first_year..=cfg.last_year {
        for month in 1..=12 {
            let days = days_in(year, month);
            let mut present = Vec::with_capacity(cfg.stations.len());
            for _ in &cfg.stations {
                let mut mask = [vec![true; days.len()], vec![true; days.len()], vec![true; days.len()]];
                for m in &mut mask {
                    if rng.random_bool(cfg.month_drop_rate) {
                        m.iter_mut().for_each(|d| *d = false);
                    } else if rng.random_bool(cfg.month_gap_rate) {
                        let keep = rng.random_range((days.len() * 55 / 100)..=days.len());
                        let mut order: Vec<usize> = (0..days.len()).collect();
                        order.shuffle(&mut rng);
                        for &d in &order[keep..] {
                            m[d] = false;
                        }
                    }
                    for d in m.iter_mut() {
                        if rng.random_bool(cfg.day_gap_rate) {
                            *d = false;
                        }
                    }
                }
                present.push(mask);
            }
            for (d, &date) in days.iter().enumerate() {
                for (s, station) in cfg.stations.iter().enumerate() {
                    let values = daily_values(station, date, &mut rng, &noise);
                    for (e, element) in elements.iter().enumerate() {
                        if !present[s][e][d] {
                            continue;
                        }
                        observations.push(reading(&station.id, date, element.clone(), values[e], None));
                        if rng.random_bool(cfg.duplicate_rate) {
                            let jitter = rng.random_range(-15..=15);
                            let v = if *element == Element::Prcp {
                                (values[e] + jitter).max(0)
                            } else {
                                values[e] + jitter
                            };
                            observations.push(reading(&station.id, date, element.clone(), v, None));
                        }
                        if rng.random_bool(cfg.flagged_rate) {
                            observations.push(reading(&station.id, date, element.clone(), 9999, Some('X')));
                        }
                    }
                    if rng.random_bool(cfg.other_element_rate) {
                        observations.push(reading(&station.id, date, Element::Snwd, 0, None));
                    }
                }
            }
        }
    }
    SyntheticWorld {
        stations: cfg.stations.clone(),
        observations,
    }
}

impl SyntheticWorld {
    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.observations.iter().map(|o| o.date.year()).collect();
        y.dedup();
        y
    }

    pub fn year_lines(&self, year: i32) -> impl Iterator<Item = String> + '_ {
        self.observations
            .iter()
            .filter(move |o| o.date.year() == year)
            .map(RawObservation::to_csv_line)
    }

    pub fn write_year_csv(&self, year: i32, path: &Path) -> Result<u64> {
        let file = File::create(path).at(path)?;
        self.write_lines(year, BufWriter::new(file), path)
    }

    pub fn write_year_gz(&self, year: i32, path: &Path) -> Result<u64> {
        let file = File::create(path).at(path)?;
        let gz = GzEncoder::new(BufWriter::new(file), Compression::default());
        self.write_lines(year, gz, path)
    }

    fn write_lines(&self, year: i32, mut out: impl Write, path: &Path) -> Result<u64> {
        let mut n = 0;
        for line in self.year_lines(year) {
            writeln!(out, "{line}").at(path)?;
            n += 1;
        }
        out.flush().at(path)?;
        Ok(n)
    }

    pub fn stations_text(&self) -> String {
        self.stations
            .iter()
            .map(|s| format_station_line(&s.record()) + "\n")
            .collect()
    }

    pub fn write_stations(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.stations_text()).at(path)
    }
}
