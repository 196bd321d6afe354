use std::path::{Path, PathBuf};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path as UrlPath, Query, Request, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;
use wxfuse_core::catalog::{map_link, ScopeKind, StationMeta};
use wxfuse_core::forecast::ForecastResult;
use wxfuse_core::pipeline::{read_descriptor, ForecastRequest, ViewRequest};
use wxfuse_core::store::CreateOptions;
use wxfuse_core::view::MinableView;
use wxfuse_core::{Unit, Variable};

use crate::error::ApiError;
use crate::jobs::{Job, JobKind};
use crate::{blocking, AppState};

type ApiResult<T> = Result<Ok<T>, ApiError>;

/// Success envelope.
pub struct Ok<T>(StatusCode, T);

fn ok<T>(data: T) -> ApiResult<T> {
    Result::Ok(Ok(StatusCode::OK, data))
}

fn accepted(job: Job) -> ApiResult<Job> {
    Result::Ok(Ok(StatusCode::ACCEPTED, job))
}

impl<T: Serialize> IntoResponse for Ok<T> {
    fn into_response(self) -> Response {
        (self.0, axum::Json(json!({ "ok": true, "data": self.1 }))).into_response()
    }
}

/// JSON body whose rejections use the error envelope.
pub struct Body<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        axum::Json::<T>::from_request(req, state)
            .await
            .map(|j| Body(j.0))
            .map_err(|e: JsonRejection| ApiError::bad_request(e.body_text()))
    }
}

/// Query string whose rejections use the error envelope.
pub struct Params<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| Params(q.0))
            .map_err(|e: QueryRejection| ApiError::bad_request(e.body_text()))
    }
}

/// Path segments whose rejections use the error envelope.
pub struct Segments<T>(T);

impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for Segments<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        UrlPath::<T>::from_request_parts(parts, state)
            .await
            .map(|p| Segments(p.0))
            .map_err(|e| ApiError::bad_request(e.body_text()))
    }
}

pub fn router(state: AppState) -> Router {
    let mut app = Router::new()
        .route("/health", get(health))
        .route("/years", get(years))
        .route("/years/{year}/download", post(download))
        .route("/years/{year}/ingest", post(ingest))
        .route("/catalog/regions", get(regions))
        .route("/catalog/countries", get(countries))
        .route("/catalog/stations", get(stations))
        .route("/databases", get(databases).post(create_database))
        .route("/databases/{name}", get(database))
        .route("/databases/{name}/years/{year}", post(load))
        .route("/databases/{name}/series", get(series))
        .route("/views", get(views).post(build_view))
        .route("/forecasts", post(forecast))
        .route("/evaluations", post(evaluate))
        .route("/jobs", get(jobs))
        .route("/jobs/{id}", get(job));
    if let Some(dir) = state.inner.ui_dir.clone() {
        app = app.nest_service("/ui", ServeDir::new(dir));
    }
    app.fallback(not_found).with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

async fn health() -> ApiResult<Value> {
    ok(json!({ "status": "ok" }))
}

async fn years(State(s): State<AppState>) -> ApiResult<Vec<i32>> {
    ok(blocking(move || s.workspace().world_years().map_err(Into::into)).await?)
}

async fn download(State(s): State<AppState>, Segments(year): Segments<i32>) -> ApiResult<Job> {
    let job = s.submit(JobKind::Download, format!("download:{year}"), format!("download {year}"), move |s, p| {
        Result::Ok(json!(s.workspace().download(year, p)?))
    })?;
    accepted(job)
}

async fn ingest(State(s): State<AppState>, Segments(year): Segments<i32>) -> ApiResult<Job> {
    // Every ingest writes the world database.
    let job = s.submit(JobKind::Ingest, "world".into(), format!("ingest {year}"), move |s, p| {
        Result::Ok(json!(s.workspace().ingest(year, None, p)?))
    })?;
    accepted(job)
}

#[derive(Deserialize)]
struct RegionFilter {
    region: Option<String>,
}

#[derive(Deserialize)]
struct StationFilter {
    country: Option<String>,
    region: Option<String>,
}

#[derive(Serialize)]
struct StationEntry<'a> {
    #[serde(flatten)]
    meta: &'a StationMeta,
    map_link: String,
}

async fn regions(State(s): State<AppState>) -> ApiResult<Value> {
    let catalog = s.catalog().await?;
    ok(json!(catalog.regions()))
}

async fn countries(State(s): State<AppState>, Params(f): Params<RegionFilter>) -> ApiResult<Value> {
    let catalog = s.catalog().await?;
    let region = match f.region.as_deref() {
        Some(r) => Some(catalog.resolve(ScopeKind::Region, r)?),
        None => None,
    };
    let list: Vec<_> = catalog
        .countries()
        .filter(|c| region.as_ref().is_none_or(|r| matches!(r, wxfuse_core::catalog::Scope::Region(n) if *n == c.region)))
        .collect();
    ok(json!(list))
}

async fn stations(State(s): State<AppState>, Params(f): Params<StationFilter>) -> ApiResult<Value> {
    let catalog = s.catalog().await?;
    let country = match f.country.as_deref() {
        Some(c) => Some(catalog.country(c)?.code.clone()),
        None => None,
    };
    let region = match f.region.as_deref() {
        Some(r) => match catalog.resolve(ScopeKind::Region, r)? {
            wxfuse_core::catalog::Scope::Region(n) => Some(n),
            _ => None,
        },
        None => None,
    };
    let list: Vec<StationEntry> = catalog
        .stations()
        .filter(|m| country.as_ref().is_none_or(|c| *c == m.country_code))
        .filter(|m| region.as_ref().is_none_or(|r| *r == m.region))
        .map(|meta| StationEntry {
            meta,
            map_link: map_link(meta.latitude, meta.longitude),
        })
        .collect();
    ok(json!(list))
}

#[derive(Deserialize)]
struct CreateDatabase {
    scope_kind: Option<ScopeKind>,
    scope_id: String,
    #[serde(default)]
    overwrite: bool,
}

async fn create_database(State(s): State<AppState>, Body(req): Body<CreateDatabase>) -> ApiResult<Value> {
    let catalog = s.catalog().await?;
    let info = blocking(move || {
        let ws = s.workspace();
        let scope = ws.resolve_scope(&catalog, req.scope_kind, &req.scope_id)?;
        let opts = CreateOptions {
            overwrite: req.overwrite,
            strict: true,
        };
        ws.create_database(&catalog, &scope, opts).map_err(Into::into)
    })
    .await?;
    Result::Ok(Ok(StatusCode::CREATED, json!(info)))
}

async fn databases(State(s): State<AppState>) -> ApiResult<Value> {
    ok(json!(blocking(move || s.workspace().databases().map_err(Into::into)).await?))
}

async fn database(State(s): State<AppState>, Segments(name): Segments<String>) -> ApiResult<Value> {
    ok(json!(blocking(move || s.workspace().database(&name).map_err(Into::into)).await?))
}

async fn load(State(s): State<AppState>, Segments((name, year)): Segments<(String, i32)>) -> ApiResult<Job> {
    // Reject unknown databases before queuing.
    let probe = s.clone();
    let db = name.clone();
    blocking(move || probe.workspace().database(&db).map(drop).map_err(Into::into)).await?;
    let job = s.submit(JobKind::LoadRegion, format!("load:{name}"), format!("load {year} into {name}"), move |s, p| {
        Result::Ok(json!(s.workspace().load(&name, year, p)?))
    })?;
    accepted(job)
}

#[derive(Deserialize)]
struct SeriesQuery {
    variable: Variable,
    unit: Option<Unit>,
    from: i32,
    to: i32,
}

async fn series(
    State(s): State<AppState>,
    Segments(name): Segments<String>,
    Params(q): Params<SeriesQuery>,
) -> ApiResult<Value> {
    let unit = q.unit.unwrap_or(q.variable.base_unit());
    let series = blocking(move || {
        s.workspace()
            .series(&name, q.variable, unit, q.from, q.to)
            .map_err(Into::into)
    })
    .await?;
    ok(json!(series))
}

/// Keep only the final component of a client-supplied path.
fn file_name_only(p: &Path) -> Result<PathBuf, ApiError> {
    p.file_name()
        .map(PathBuf::from)
        .ok_or_else(|| ApiError::bad_request(format!("{} has no file name", p.display())))
}

async fn views(State(s): State<AppState>) -> ApiResult<Vec<MinableView>> {
    let list = blocking(move || {
        let dir = s.workspace().views_dir();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| ApiError::from(wxfuse_core::Error::disk(&dir, e)))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "arff"))
            .collect();
        paths.sort();
        Result::Ok(paths.iter().filter_map(|p| read_descriptor(p)).collect())
    })
    .await?;
    ok(list)
}

async fn build_view(State(s): State<AppState>, Body(mut req): Body<ViewRequest>) -> ApiResult<MinableView> {
    if let Some(out) = req.out.take() {
        req.out = Some(s.workspace().views_dir().join(file_name_only(&out)?));
    }
    let catalog = s.catalog().await?;
    let view = blocking(move || s.workspace().build_view(&catalog, &req).map_err(Into::into)).await?;
    Result::Ok(Ok(StatusCode::CREATED, view))
}

async fn forecast(State(s): State<AppState>, Body(mut req): Body<ForecastRequest>) -> ApiResult<ForecastResult> {
    req.view = s.workspace().views_dir().join(file_name_only(&req.view)?);
    let catalog = match req.mode {
        wxfuse_core::forecast::Mode::Nba => Some(s.catalog().await?),
        _ => None,
    };
    let result = blocking(move || s.workspace().forecast(catalog.as_deref(), &req).map_err(Into::into)).await?;
    ok(result)
}

#[derive(Deserialize)]
struct EvaluationRequest {
    forecast: ForecastResult,
    db: String,
}

async fn evaluate(State(s): State<AppState>, Body(req): Body<EvaluationRequest>) -> ApiResult<Value> {
    let report = blocking(move || s.workspace().evaluate(&req.forecast, &req.db).map_err(Into::into)).await?;
    ok(json!(report))
}

async fn jobs(State(s): State<AppState>) -> ApiResult<Vec<Job>> {
    ok(s.jobs().list())
}

async fn job(State(s): State<AppState>, Segments(id): Segments<u64>) -> ApiResult<Job> {
    match s.jobs().get(id) {
        Some(j) => ok(j),
        None => Err(ApiError::not_found(format!("no job {id}"))),
    }
}
