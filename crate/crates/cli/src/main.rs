//! `wxfuse`: the scripted front end of the weather fusion pipeline.
//!
//! Every command prints JSON on stdout when stdout is not a terminal (or with
//! `--output json`) and an aligned table otherwise. Exit status is 0 on
//! success, 2 on usage errors and 3 on engine errors, with `E_<CODE>: message`
//! on stderr.

mod plot;
mod table;

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use wxfuse_core::catalog::{map_link, ScopeKind};
use wxfuse_core::forecast::{ForecastResult, Method, Mode, DEFAULT_SEED};
use wxfuse_core::metrics::{render_table, MetricsReport};
use wxfuse_core::pipeline::{ForecastRequest, ViewRequest, Workspace};
use wxfuse_core::store::CreateOptions;
use wxfuse_core::synthetic::{filler_stations, generate_world, jordan_stations, WorldConfig};
use wxfuse_core::view::{MinableView, ViewKind};
use wxfuse_core::{Error, Unit, Variable};

#[derive(Parser)]
#[command(name = "wxfuse", version, about = "GHCN daily ingest, regional fusion and 12-month forecasting")]
struct Cli {
    /// Data directory holding the station list, downloads, store and views.
    #[arg(long, env = "WF_DATA_DIR", default_value = "wf-data", global = true)]
    data_dir: PathBuf,
    /// Base URL of the by-year archive.
    #[arg(long, env = "WF_GHCN_BASE_URL", global = true)]
    base_url: Option<String>,
    #[arg(long, value_enum, default_value_t = Output::Auto, global = true)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Auto,
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch `<year>.csv.gz` into the downloads directory.
    Download { year: i32 },
    /// Decompress and load one year into the world database.
    Ingest {
        year: i32,
        /// Local `.csv` or `.csv.gz` instead of the cached download.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Region databases.
    #[command(subcommand)]
    Db(DbCommand),
    /// Monthly fused series of one variable.
    Series {
        db: String,
        variable: Variable,
        unit: Unit,
        from: i32,
        to: i32,
        /// Also write an SVG line chart.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Build an ARFF view.
    #[command(subcommand)]
    View(ViewCommand),
    /// Predict the 12 months after a view.
    Forecast(ForecastArgs),
    /// Score forecasts against a database's fused values.
    Evaluate {
        /// Forecast JSON file; repeat to compare methods side by side.
        #[arg(long = "forecast", required = true)]
        forecasts: Vec<PathBuf>,
        #[arg(long)]
        db: String,
    },
    /// Station catalog listings.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Write a synthetic station list and by-year archive files.
    Synth(SynthArgs),
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "WF_ADDR", default_value = wxfuse_service::config::DEFAULT_ADDR)]
        addr: std::net::SocketAddr,
        #[arg(long, env = "WF_WORKERS", default_value_t = wxfuse_service::config::DEFAULT_WORKERS)]
        workers: usize,
        /// Built console assets served under `/ui`.
        #[arg(long, env = "WF_UI_DIR")]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DbCommand {
    /// Create a database for a station, country or region.
    Create {
        scope: String,
        #[arg(long, value_parser = parse_scope_kind)]
        kind: Option<ScopeKind>,
        #[arg(long)]
        overwrite: bool,
    },
    /// Aggregate one ingested year into a database.
    Load { db: String, year: i32 },
    List,
    Show { db: String },
}

#[derive(Subcommand)]
enum ViewCommand {
    /// Monthly rainfall, tmax and tmin of one database.
    Standard {
        #[arg(long)]
        db: String,
        #[arg(long)]
        from: i32,
        #[arg(long)]
        to: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rows of one variable across station databases.
    Neighbour {
        /// Comma-separated station database names.
        #[arg(long, value_delimiter = ',', required = true)]
        stations: Vec<String>,
        #[arg(long)]
        variable: Variable,
        #[arg(long)]
        unit: Option<Unit>,
        #[arg(long)]
        from: i32,
        #[arg(long)]
        to: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Twelve unknown-value rows for a target station.
    Test {
        #[arg(long)]
        station: String,
        #[arg(long)]
        variable: Variable,
        #[arg(long)]
        year: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ForecastArgs {
    #[arg(long)]
    view: PathBuf,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    variable: Option<Variable>,
    #[arg(long)]
    target_station: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the result JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CatalogCommand {
    Regions,
    Countries {
        #[arg(long)]
        region: Option<String>,
    },
    Stations {
        #[arg(long)]
        country: Option<String>,
        #[arg(long)]
        region: Option<String>,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2014)]
    from: i32,
    #[arg(long, default_value_t = 2017)]
    to: i32,
    /// Stations outside Jordan to add.
    #[arg(long, default_value_t = 20)]
    fillers: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn parse_scope_kind(s: &str) -> Result<ScopeKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "station" => Ok(ScopeKind::Station),
        "country" => Ok(ScopeKind::Country),
        "region" => Ok(ScopeKind::Region),
        _ => Err(format!("{s:?} is not station, country or region")),
    }
}

/// What a command prints: JSON for machines, text for people.
struct Rendered {
    json: Value,
    table: String,
}

fn rendered<T: serde::Serialize>(value: &T, table: String) -> Rendered {
    Rendered {
        json: serde_json::to_value(value).expect("serialisable"),
        table,
    }
}

fn progress_printer(label: String) -> impl FnMut(u8) {
    let tty = std::io::stderr().is_terminal();
    let mut last = None;
    move |p| {
        if tty && last != Some(p) {
            last = Some(p);
            eprint!("\r{label} {p:>3}%");
            if p == 100 {
                eprintln!();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_out = match cli.output {
        Output::Json => true,
        Output::Table => false,
        Output::Auto => !std::io::stdout().is_terminal(),
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = if json_out {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&out.json).expect("JSON"))
            } else {
                write!(stdout, "{}", out.table)
            };
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            ExitCode::from(3)
        }
    }
}

fn workspace(cli: &Cli) -> Result<Workspace, Error> {
    let ws = Workspace::open(&cli.data_dir)?;
    Ok(match &cli.base_url {
        Some(url) => ws.with_base_url(url.clone()),
        None => ws,
    })
}

fn run(cli: &Cli) -> Result<Rendered, Error> {
    match &cli.command {
        Command::Download { year } => {
            let ws = workspace(cli)?;
            let file = ws.download(*year, &mut progress_printer(format!("download {year}")))?;
            let t = table::pairs(&[
                ("year", file.year.to_string()),
                ("file", file.compressed_path.display().to_string()),
                ("bytes", file.compressed_bytes.to_string()),
            ]);
            Ok(rendered(&file, t))
        }
        Command::Ingest { year, file } => {
            let ws = workspace(cli)?;
            let report = ws.ingest(*year, file.as_deref(), &mut progress_printer(format!("ingest {year}")))?;
            let s = &report.summary;
            let t = table::pairs(&[
                ("year", s.year.to_string()),
                ("lines", s.stats.lines.to_string()),
                ("retained", s.stats.retained.to_string()),
                ("quality flagged", s.stats.quality_flagged.to_string()),
                ("other elements", s.stats.other_elements.to_string()),
                ("malformed", s.stats.malformed.to_string()),
                ("wrong year", s.wrong_year.to_string()),
                ("documents", s.docs.to_string()),
            ]);
            Ok(rendered(&report, t))
        }
        Command::Db(cmd) => db(cli, cmd),
        Command::Series {
            db,
            variable,
            unit,
            from,
            to,
            plot,
        } => {
            let ws = workspace(cli)?;
            let series = ws.series(db, *variable, *unit, *from, *to)?;
            if let Some(path) = plot {
                let svg = plot::series_svg(&series, &format!("{db} {variable}"));
                std::fs::write(path, svg).map_err(|e| Error::disk(path, e))?;
            }
            let rows: Vec<Vec<String>> = series
                .iter()
                .map(|(m, v)| vec![format!("{}-{:02}", m.year, m.month), v.to_string()])
                .collect();
            let mut t = format!("{db} {variable} ({unit}), missing {:.1}%\n", series.missing_rate * 100.0);
            t.push_str(&table::render(&["month", "value"], &rows));
            Ok(rendered(&series, t))
        }
        Command::View(cmd) => view(cli, cmd),
        Command::Forecast(args) => forecast(cli, args),
        Command::Evaluate { forecasts, db } => {
            let ws = workspace(cli)?;
            let mut reports: Vec<MetricsReport> = Vec::new();
            for path in forecasts {
                let text = std::fs::read_to_string(path).map_err(|e| Error::disk(path, e))?;
                let result: ForecastResult = serde_json::from_str(&text)
                    .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
                reports.push(ws.evaluate(&result, db)?);
            }
            let t = render_table(&reports);
            let json = if reports.len() == 1 {
                serde_json::to_value(&reports[0])
            } else {
                serde_json::to_value(&reports)
            }
            .expect("serialisable");
            Ok(Rendered { json, table: t })
        }
        Command::Catalog(cmd) => catalog(cli, cmd),
        Command::Synth(args) => synth(args),
        Command::Serve { addr, workers, ui_dir } => {
            let config = wxfuse_service::Config {
                addr: *addr,
                data_dir: cli.data_dir.clone(),
                workers: *workers,
                base_url: cli
                    .base_url
                    .clone()
                    .unwrap_or_else(|| wxfuse_core::ingest::DEFAULT_BASE_URL.into()),
                ui_dir: ui_dir.clone(),
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::disk(&cli.data_dir, e))?;
            rt.block_on(wxfuse_service::serve(config))
                .map_err(|e| Error::Network(e.to_string()))?;
            Ok(Rendered {
                json: json!({ "stopped": true }),
                table: String::new(),
            })
        }
    }
}

fn db_table(infos: &[wxfuse_core::pipeline::DatabaseInfo]) -> String {
    let rows: Vec<Vec<String>> = infos
        .iter()
        .map(|d| {
            let years: Vec<String> = d.years.iter().map(i32::to_string).collect();
            vec![d.name.clone(), d.scope.to_string(), d.stations.len().to_string(), years.join(",")]
        })
        .collect();
    table::render(&["database", "scope", "stations", "years"], &rows)
}

fn db(cli: &Cli, cmd: &DbCommand) -> Result<Rendered, Error> {
    let ws = workspace(cli)?;
    match cmd {
        DbCommand::Create { scope, kind, overwrite } => {
            let catalog = ws.catalog()?;
            let scope = ws.resolve_scope(&catalog, *kind, scope)?;
            let opts = CreateOptions {
                overwrite: *overwrite,
                strict: true,
            };
            let info = ws.create_database(&catalog, &scope, opts)?;
            let t = db_table(std::slice::from_ref(&info));
            Ok(rendered(&info, t))
        }
        DbCommand::Load { db, year } => {
            let summary = ws.load(db, *year, &mut progress_printer(format!("load {year}")))?;
            let rows: Vec<Vec<String>> = summary
                .variables
                .iter()
                .map(|v| {
                    vec![
                        v.variable.to_string(),
                        v.daily_docs.to_string(),
                        v.monthly_docs.to_string(),
                        v.missing_months.to_string(),
                    ]
                })
                .collect();
            let t = table::render(&["variable", "daily docs", "monthly docs", "missing months"], &rows);
            Ok(rendered(&summary, t))
        }
        DbCommand::List => {
            let infos = ws.databases()?;
            let t = db_table(&infos);
            Ok(rendered(&infos, t))
        }
        DbCommand::Show { db } => {
            let info = ws.database(db)?;
            let t = db_table(std::slice::from_ref(&info));
            Ok(rendered(&info, t))
        }
    }
}

fn view_table(v: &MinableView) -> String {
    table::pairs(&[
        ("kind", format!("{:?}", v.kind).to_lowercase()),
        ("file", v.path.display().to_string()),
        ("years", format!("{}-{}", v.from_year, v.to_year)),
        ("rows", v.rows.to_string()),
    ])
}

fn view(cli: &Cli, cmd: &ViewCommand) -> Result<Rendered, Error> {
    let ws = workspace(cli)?;
    let req = match cmd {
        ViewCommand::Standard { db, from, to, out } => ViewRequest {
            kind: Some(ViewKind::Standard),
            db: Some(db.clone()),
            from: Some(*from),
            to: Some(*to),
            out: out.clone(),
            ..ViewRequest::default()
        },
        ViewCommand::Neighbour {
            stations,
            variable,
            unit,
            from,
            to,
            out,
        } => ViewRequest {
            kind: Some(ViewKind::Neighbour),
            stations: stations.clone(),
            variable: Some(*variable),
            unit: *unit,
            from: Some(*from),
            to: Some(*to),
            out: out.clone(),
            ..ViewRequest::default()
        },
        ViewCommand::Test {
            station,
            variable,
            year,
            out,
        } => ViewRequest {
            kind: Some(ViewKind::Test),
            variable: Some(*variable),
            target_station: Some(station.clone()),
            year: Some(*year),
            out: out.clone(),
            ..ViewRequest::default()
        },
    };
    // Standard views need no station metadata.
    let catalog = match req.kind {
        Some(ViewKind::Standard) => Default::default(),
        _ => ws.catalog()?,
    };
    let view = ws.build_view(&catalog, &req)?;
    let t = view_table(&view);
    Ok(rendered(&view, t))
}

fn forecast(cli: &Cli, args: &ForecastArgs) -> Result<Rendered, Error> {
    let ws = workspace(cli)?;
    let catalog = match args.mode {
        Mode::Nba => Some(ws.catalog()?),
        _ => None,
    };
    let req = ForecastRequest {
        view: args.view.clone(),
        mode: args.mode,
        method: args.method,
        variable: args.variable,
        target_station: args.target_station.clone(),
        seed: Some(args.seed),
    };
    let result = ws.forecast(catalog.as_ref(), &req)?;
    if let Some(out) = &args.out {
        write_json(out, &result)?;
    }
    let rows: Vec<Vec<String>> = result
        .predictions
        .iter()
        .map(|p| vec![format!("{}-{:02}", p.year, p.month), format!("{:.4}", p.value)])
        .collect();
    let mut t = format!(
        "{} {} {} ({}), seed {}\n",
        result.mode, result.method, result.variable, result.unit, result.seed
    );
    t.push_str(&table::render(&["month", "predicted"], &rows));
    Ok(rendered(&result, t))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("serialisable");
    std::fs::write(path, text).map_err(|e| Error::disk(path, e))
}

fn catalog(cli: &Cli, cmd: &CatalogCommand) -> Result<Rendered, Error> {
    let ws = workspace(cli)?;
    let catalog = ws.catalog()?;
    match cmd {
        CatalogCommand::Regions => {
            let regions = catalog.regions();
            let rows: Vec<Vec<String>> = regions.iter().map(|r| vec![r.name.clone()]).collect();
            let t = table::render(&["region"], &rows);
            Ok(rendered(&regions, t))
        }
        CatalogCommand::Countries { region } => {
            let region = match region {
                Some(r) => Some(region_name(&catalog, r)?),
                None => None,
            };
            let list: Vec<_> = catalog
                .countries()
                .filter(|c| region.as_ref().is_none_or(|r| *r == c.region))
                .collect();
            let rows: Vec<Vec<String>> = list
                .iter()
                .map(|c| vec![c.code.clone(), c.name.clone(), c.region.clone()])
                .collect();
            let t = table::render(&["code", "country", "region"], &rows);
            Ok(rendered(&list, t))
        }
        CatalogCommand::Stations { country, region } => {
            let country = match country {
                Some(c) => Some(catalog.country(c)?.code.clone()),
                None => None,
            };
            let region = match region {
                Some(r) => Some(region_name(&catalog, r)?),
                None => None,
            };
            let list: Vec<Value> = catalog
                .stations()
                .filter(|m| country.as_ref().is_none_or(|c| *c == m.country_code))
                .filter(|m| region.as_ref().is_none_or(|r| *r == m.region))
                .map(|m| {
                    let mut v = serde_json::to_value(m).expect("serialisable");
                    v["map_link"] = json!(map_link(m.latitude, m.longitude));
                    v
                })
                .collect();
            let rows: Vec<Vec<String>> = catalog
                .stations()
                .filter(|m| country.as_ref().is_none_or(|c| *c == m.country_code))
                .filter(|m| region.as_ref().is_none_or(|r| *r == m.region))
                .map(|m| {
                    vec![
                        m.station_id.clone(),
                        m.name.clone(),
                        m.country_code.clone(),
                        format!("{:.4}", m.latitude),
                        format!("{:.4}", m.longitude),
                        m.elevation.map_or_else(|| "?".into(), |e| format!("{e:.1}")),
                    ]
                })
                .collect();
            let t = table::render(&["station", "name", "country", "lat", "lon", "elev"], &rows);
            Ok(Rendered {
                json: Value::Array(list),
                table: t,
            })
        }
    }
}

fn region_name(catalog: &wxfuse_core::catalog::Catalog, key: &str) -> Result<String, Error> {
    match catalog.resolve(ScopeKind::Region, key)? {
        wxfuse_core::catalog::Scope::Region(name) => Ok(name),
        other => Err(Error::UnknownScope(other.to_string())),
    }
}

fn synth(args: &SynthArgs) -> Result<Rendered, Error> {
    if args.from > args.to {
        return Err(Error::Malformed(format!("--from {} is after --to {}", args.from, args.to)));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Error::disk(&args.out, e))?;
    let mut stations = jordan_stations();
    stations.extend(filler_stations(args.fillers, args.seed));
    let world = generate_world(&WorldConfig::new(stations, args.from, args.to, args.seed));
    let stations_path = args.out.join(wxfuse_core::ingest::STATIONS_FILE);
    world.write_stations(&stations_path)?;
    let mut files = Vec::new();
    for year in world.years() {
        let path = args.out.join(format!("{year}.csv.gz"));
        let lines = world.write_year_gz(year, &path)?;
        files.push(json!({ "year": year, "path": path, "lines": lines }));
    }
    let rows: Vec<Vec<String>> = files
        .iter()
        .map(|f| vec![f["year"].to_string(), f["lines"].to_string(), f["path"].as_str().unwrap_or("").to_string()])
        .collect();
    let t = table::render(&["year", "lines", "file"], &rows);
    Ok(Rendered {
        json: json!({ "stations": stations_path, "station_count": world.stations.len(), "files": files }),
        table: t,
    })
}

