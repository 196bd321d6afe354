//! The operator workflow over a data directory: download, ingest, database
//! creation and loading, series, views, forecasts and evaluation. The CLI and
//! the HTTP service both drive the engine through [`Workspace`].
//!
//! Layout of a data directory:
//!
//! ```text
//! <root>/ghcnd-stations.txt   station list (fixed width)
//! <root>/countries.csv        optional country table override
//! <root>/downloads/           <year>.csv.gz and <year>.csv
//! <root>/store/               document store
//! <root>/views/               ARFF views and their .json descriptors
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::{MonthlySeries, ValidityRule};
use crate::catalog::{load_catalog, Catalog, Scope, ScopeKind};
use crate::error::{Error, IoContext, Result};
use crate::forecast::{self, BaggingParams, ForecastResult, Method, Mode, DEFAULT_SEED};
use crate::ingest::{
    decompress_gz, download_stations_from, download_year_from, IngestPolicy, YearFile, DEFAULT_BASE_URL,
    STATIONS_FILE,
};
use crate::metrics::{evaluate_case, MetricsReport};
use crate::store::{
    create_region_store, ingest_year, load_region_year, read_docs, read_monthly_series, region_meta, CreateOptions,
    DocumentStore, FileStore, IngestSummary, LoadSummary, MonthlyFusedDoc, WORLD_DB,
};
use crate::types::{MonthValue, Unit, Variable, YearMonth};
use crate::view::{
    read_view, write_neighbour_view, write_standard_view, write_test_view, MinableView, ViewKind,
};

pub const COUNTRIES_FILE: &str = "countries.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub file: YearFile,
    pub summary: IngestSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseInfo {
    pub name: String,
    pub scope: Scope,
    pub stations: Vec<String>,
    /// Years with fused monthly documents.
    pub years: Vec<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViewRequest {
    pub kind: Option<ViewKind>,
    /// Source database of a standard view.
    #[serde(default)]
    pub db: Option<String>,
    /// Station databases of a neighbour view.
    #[serde(default)]
    pub stations: Vec<String>,
    #[serde(default)]
    pub variable: Option<Variable>,
    #[serde(default)]
    pub unit: Option<Unit>,
    #[serde(default)]
    pub from: Option<i32>,
    #[serde(default)]
    pub to: Option<i32>,
    /// Target station and year of a test view.
    #[serde(default)]
    pub target_station: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
    /// Output file; defaults to a generated name under `views/`.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRequest {
    pub view: PathBuf,
    pub mode: Mode,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub variable: Option<Variable>,
    #[serde(default)]
    pub target_station: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn required<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::malformed(format!("missing {what}")))
}

fn descriptor_path(view: &Path) -> PathBuf {
    let mut s = view.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Descriptor written beside a view file, when present.
pub fn read_descriptor(view: &Path) -> Option<MinableView> {
    let text = fs::read_to_string(descriptor_path(view)).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_descriptor(view: &MinableView) -> Result<()> {
    let path = descriptor_path(&view.path);
    let text = serde_json::to_string_pretty(view).expect("descriptor serialises");
    fs::write(&path, text).at(&path)
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

pub struct Workspace {
    root: PathBuf,
    store: FileStore,
    base_url: String,
    rule: ValidityRule,
}

impl Workspace {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for dir in ["downloads", "store", "views"] {
            let d = root.join(dir);
            fs::create_dir_all(&d).at(&d)?;
        }
        let store = FileStore::open(root.join("store"))?;
        Ok(Workspace {
            root,
            store,
            base_url: DEFAULT_BASE_URL.to_string(),
            rule: ValidityRule::default(),
        })
    }

    pub fn with_base_url(mut self, base: impl Into<String>) -> Self {
        self.base_url = base.into();
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn store(&self) -> &FileStore {
        &self.store
    }

    pub fn downloads_dir(&self) -> PathBuf {
        self.root.join("downloads")
    }

    pub fn views_dir(&self) -> PathBuf {
        self.root.join("views")
    }

    pub fn stations_path(&self) -> PathBuf {
        self.root.join(STATIONS_FILE)
    }

    /// Load the station catalog, fetching the station list first if it is
    /// not in the data directory.
    pub fn catalog(&self) -> Result<Catalog> {
        let stations = self.stations_path();
        if !stations.exists() {
            download_stations_from(&self.base_url, &self.root)?;
        }
        let countries = self.root.join(COUNTRIES_FILE);
        load_catalog(&stations, countries.exists().then_some(countries.as_path()))
    }

    pub fn download(&self, year: i32, progress: &mut dyn FnMut(u8)) -> Result<YearFile> {
        download_year_from(&self.base_url, year, &self.downloads_dir(), progress)
    }

    /// Decompress (downloading first if needed) and load one year into the
    /// world database. `source` may name a local `.csv` or `.csv.gz` file.
    pub fn ingest(&self, year: i32, source: Option<&Path>, progress: &mut dyn FnMut(u8)) -> Result<IngestReport> {
        let mut last = 0u8;
        let mut report = |lo: u8, hi: u8, pct: u8| {
            let p = lo + ((hi - lo) as u32 * pct as u32 / 100) as u8;
            if p > last {
                last = p;
                progress(p);
            }
        };
        report(0, 0, 0);
        let downloads = self.downloads_dir();
        let is_gz = |p: &Path| p.extension().is_some_and(|e| e == "gz");
        let (mut file, csv) = match source {
            Some(p) if !is_gz(p) => {
                let bytes = fs::metadata(p).at(p)?.len();
                (year_file(year, p, bytes), p.to_path_buf())
            }
            _ => {
                let gz = match source {
                    Some(p) => p.to_path_buf(),
                    None => {
                        let cached = downloads.join(format!("{year}.csv.gz"));
                        if !cached.exists() {
                            self.download(year, &mut |p| report(0, 40, p))?;
                        }
                        cached
                    }
                };
                report(0, 40, 100);
                let bytes = fs::metadata(&gz).at(&gz)?.len();
                let csv = decompress_gz(&gz, &downloads)?;
                report(40, 50, 100);
                (year_file(year, &gz, bytes), csv)
            }
        };
        let summary = ingest_year(&self.store, &csv, year, IngestPolicy::default(), &mut |p| report(50, 100, p))?;
        report(50, 100, 100);
        file.csv_bytes = fs::metadata(&csv).ok().map(|m| m.len());
        file.csv_path = Some(csv);
        file.record_count = Some(summary.stats.lines);
        Ok(IngestReport { file, summary })
    }

    pub fn resolve_scope(&self, catalog: &Catalog, kind: Option<ScopeKind>, key: &str) -> Result<Scope> {
        match kind {
            Some(kind) => catalog.resolve(kind, key),
            None => catalog.resolve_any(key),
        }
    }

    pub fn create_database(&self, catalog: &Catalog, scope: &Scope, opts: CreateOptions) -> Result<DatabaseInfo> {
        let name = create_region_store(&self.store, catalog, scope, opts)?;
        self.database(&name)
    }

    pub fn load(&self, db: &str, year: i32, progress: &mut dyn FnMut(u8)) -> Result<LoadSummary> {
        load_region_year(&self.store, db, year, self.rule, progress)
    }

    pub fn database(&self, name: &str) -> Result<DatabaseInfo> {
        let meta = region_meta(&self.store, name)?;
        let docs: Vec<MonthlyFusedDoc> = read_docs(&self.store, name, Variable::Prcp.total_collection())?;
        let years: BTreeSet<i32> = docs.iter().map(|d| d.year).collect();
        Ok(DatabaseInfo {
            name: name.to_string(),
            scope: meta.scope,
            stations: meta.stations,
            years: years.into_iter().collect(),
        })
    }

    /// Region databases, by name.
    pub fn databases(&self) -> Result<Vec<DatabaseInfo>> {
        self.store
            .list_databases()?
            .into_iter()
            .filter(|n| n != WORLD_DB)
            .map(|n| self.database(&n))
            .collect()
    }

    /// Years present in the world database.
    pub fn world_years(&self) -> Result<Vec<i32>> {
        if !self.store.database_exists(WORLD_DB) {
            return Ok(Vec::new());
        }
        let mut years: Vec<i32> = self
            .store
            .list_collections(WORLD_DB)?
            .iter()
            .filter_map(|c| c.parse().ok())
            .collect();
        years.sort_unstable();
        Ok(years)
    }

    pub fn series(&self, db: &str, variable: Variable, unit: Unit, from: i32, to: i32) -> Result<MonthlySeries> {
        read_monthly_series(&self.store, db, variable, unit, from, to)
    }

    /// Resolve a view reference: absolute or existing paths are used as
    /// given, anything else is looked up under `views/`.
    pub fn view_path(&self, view: &Path) -> PathBuf {
        if view.is_absolute() || view.exists() {
            view.to_path_buf()
        } else {
            self.views_dir().join(view)
        }
    }

    pub fn build_view(&self, catalog: &Catalog, req: &ViewRequest) -> Result<MinableView> {
        let kind = req.kind.unwrap_or(ViewKind::Standard);
        let view = match kind {
            ViewKind::Standard => {
                let db = required(req.db.as_deref(), "db")?;
                let (from, to) = (required(req.from, "from")?, required(req.to, "to")?);
                let out = req.out.clone().unwrap_or_else(|| {
                    self.views_dir().join(format!("standard-{}-{from}-{to}.arff", slug(db)))
                });
                write_standard_view(&self.store, db, from, to, &out)?
            }
            ViewKind::Neighbour => {
                let variable = required(req.variable, "variable")?;
                let unit = req.unit.unwrap_or(variable.base_unit());
                let (from, to) = (required(req.from, "from")?, required(req.to, "to")?);
                let first = req.stations.first().ok_or(Error::EmptyStationList)?;
                let out = req.out.clone().unwrap_or_else(|| {
                    self.views_dir().join(format!(
                        "neighbour-{}-{}x{}-{from}-{to}.arff",
                        variable.view_name(),
                        slug(first),
                        req.stations.len()
                    ))
                });
                write_neighbour_view(&self.store, catalog, &req.stations, variable, unit, from, to, &out)?
            }
            ViewKind::Test => {
                let variable = required(req.variable, "variable")?;
                let station = catalog.station(required(req.target_station.as_deref(), "target_station")?)?;
                let year = required(req.year.or(req.from), "year")?;
                let out = req.out.clone().unwrap_or_else(|| {
                    self.views_dir().join(format!(
                        "test-{}-{}-{year}.arff",
                        variable.view_name(),
                        slug(&station.station_id)
                    ))
                });
                write_test_view(station, variable, year, &out)?
            }
        };
        write_descriptor(&view)?;
        Ok(view)
    }

    pub fn forecast(&self, catalog: Option<&Catalog>, req: &ForecastRequest) -> Result<ForecastResult> {
        let path = self.view_path(&req.view);
        let dataset = read_view(&path)?;
        let descriptor = read_descriptor(&path);
        let seed = req.seed.unwrap_or(DEFAULT_SEED);
        let mut result = match req.mode {
            Mode::Univariate | Mode::Multivariate => {
                let variable = required(req.variable.or(descriptor.as_ref().and_then(|d| d.variable)), "variable")?;
                let method = req.method.unwrap_or(Method::Gp);
                forecast::forecast_standard(&dataset, req.mode, method, variable, seed)?
            }
            Mode::Nba => {
                if let Some(m) = req.method.filter(|m| *m != Method::Bagging) {
                    return Err(Error::malformed(format!("neighbour-based analysis uses bagging, not {m}")));
                }
                let catalog = required(catalog, "station catalog")?;
                let target = catalog.station(required(req.target_station.as_deref(), "target_station")?)?;
                let unit = descriptor
                    .as_ref()
                    .and_then(|d| d.unit)
                    .or_else(|| req.variable.map(Variable::base_unit));
                let unit = match (unit, &dataset) {
                    (Some(u), _) => u,
                    (None, crate::view::ArffDataset::Neighbour { attribute, .. }) => {
                        attribute.parse::<Variable>()?.base_unit()
                    }
                    _ => Unit::Mm,
                };
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let test = path.with_file_name(format!("{stem}-test-{}.arff", slug(&target.station_id)));
                forecast::forecast_nba(&dataset, target, unit, seed, BaggingParams::default(), Some(&test))?
            }
        };
        result.source_view = Some(path.display().to_string());
        Ok(result)
    }

    /// Score a forecast against the fused values of `db`. Years that are not
    /// loaded count as missing months.
    pub fn evaluate(&self, forecast: &ForecastResult, db: &str) -> Result<MetricsReport> {
        let first = forecast.predictions.first().ok_or(Error::Empty("forecast"))?;
        let last = forecast.predictions.last().expect("non-empty");
        let mut values = Vec::new();
        for year in first.year..=last.year {
            match read_monthly_series(&self.store, db, forecast.variable, forecast.unit, year, year) {
                Ok(s) => values.extend(s.values),
                Err(Error::MissingYear { .. }) => values.extend([MonthValue::Missing; 12]),
                Err(e) => return Err(e),
            }
        }
        let actuals = MonthlySeries::new(forecast.variable, forecast.unit, YearMonth::new(first.year, 1), values);
        evaluate_case(forecast, &actuals)
    }
}

fn year_file(year: i32, path: &Path, bytes: u64) -> YearFile {
    YearFile {
        year,
        compressed_path: path.to_path_buf(),
        compressed_bytes: bytes,
        csv_path: None,
        csv_bytes: None,
        record_count: None,
    }
}
