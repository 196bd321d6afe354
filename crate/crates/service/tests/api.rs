use std::path::Path;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use wxfuse_core::synthetic::{filler_stations, generate_world, jordan_stations, WorldConfig};
use wxfuse_service::{router, AppState, Config};

fn seed_data_dir(dir: &Path) {
    let mut stations = jordan_stations();
    stations.extend(filler_stations(2, 7));
    let world = generate_world(&WorldConfig::new(stations, 2014, 2016, 11));
    world.write_stations(&dir.join("ghcnd-stations.txt")).unwrap();
    std::fs::create_dir_all(dir.join("downloads")).unwrap();
    for year in world.years() {
        world
            .write_year_gz(year, &dir.join("downloads").join(format!("{year}.csv.gz")))
            .unwrap();
    }
}

fn config(dir: &Path) -> Config {
    Config {
        addr: "127.0.0.1:0".parse().unwrap(),
        data_dir: dir.to_path_buf(),
        workers: 2,
        // Nothing listens here; any attempted download fails fast.
        base_url: "http://127.0.0.1:9/by_year".into(),
        ui_dir: None,
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call_raw(app, method, uri, body.map(|b| b.to_string())).await;
    (status, serde_json::from_slice(&bytes).expect("JSON envelope"))
}

async fn call_raw(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn wait_job(app: &Router, id: u64) -> Value {
    let mut last_progress = 0;
    for _ in 0..2000 {
        let (status, v) = call(app, "GET", &format!("/jobs/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        let job = v["data"].clone();
        let p = job["progress"].as_u64().unwrap();
        assert!(p >= last_progress, "progress went backwards");
        last_progress = p;
        if matches!(job["state"].as_str(), Some("done" | "failed")) {
            return job;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("job {id} did not finish");
}

async fn run_job(app: &Router, uri: &str) -> Value {
    let (status, v) = call(app, "POST", uri, None).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{v}");
    let job = wait_job(app, v["data"]["id"].as_u64().unwrap()).await;
    assert_eq!(job["state"], "done", "{job}");
    job
}

/// Ingest 2014 to 2016, create the Jordan database and load every year.
async fn prepared(dir: &Path) -> (Router, String) {
    seed_data_dir(dir);
    let app = router(AppState::new(&config(dir)).unwrap());
    for year in 2014..=2016 {
        let job = run_job(&app, &format!("/years/{year}/ingest")).await;
        assert_eq!(job["progress"], 100);
        assert!(job["result"]["summary"]["docs"].as_u64().unwrap() > 0);
    }
    let (status, v) = call(&app, "POST", "/databases", Some(json!({"scope_kind": "country", "scope_id": "JO"}))).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let name = v["data"]["name"].as_str().unwrap().to_string();
    assert_eq!(v["data"]["stations"].as_array().unwrap().len(), 5);
    for year in 2014..=2016 {
        run_job(&app, &format!("/databases/{name}/years/{year}")).await;
    }
    (app, name)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn workflow_from_ingest_to_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let (app, db) = prepared(dir.path()).await;

    let (status, v) = call(&app, "GET", "/years", None).await;
    assert_eq!((status, v["data"].clone()), (StatusCode::OK, json!([2014, 2015, 2016])));

    let (status, v) = call(&app, "GET", &format!("/databases/{db}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["data"]["years"], json!([2014, 2015, 2016]));

    let (status, v) = call(&app, "GET", &format!("/databases/{db}/series?variable=tmax&from=2015&to=2016"), None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["data"]["values"].as_array().unwrap().len(), 24);
    assert!(v["data"]["missing_rate"].is_number());

    let (status, v) = call(
        &app,
        "POST",
        "/views",
        Some(json!({"kind": "standard", "db": db, "from": 2014, "to": 2015, "out": "../../escape.arff"})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_eq!(v["data"]["rows"], 24);
    let view_path = dir.path().join("views").join("escape.arff");
    assert!(view_path.exists(), "out is confined to the views directory");

    let (status, v) = call(
        &app,
        "POST",
        "/forecasts",
        Some(json!({"view": "escape.arff", "mode": "univariate", "method": "gp", "variable": "tmax"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let forecast = v["data"].clone();
    let preds = forecast["predictions"].as_array().unwrap();
    assert_eq!(preds.len(), 12);
    assert_eq!((preds[0]["year"].clone(), preds[0]["month"].clone()), (json!(2016), json!(1)));

    let (status, v) = call(&app, "POST", "/evaluations", Some(json!({"forecast": forecast, "db": db}))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["data"]["per_month_nmse"].as_array().unwrap().len(), 12);
    assert!(v["data"]["overall_nmse"].as_f64().unwrap() >= 0.0);

    let (status, v) = call(&app, "GET", "/views", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["data"].as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn error_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let (app, db) = prepared(dir.path()).await;

    // Unloaded year.
    let (status, v) = call(&app, "GET", &format!("/databases/{db}/series?variable=tmax&from=2015&to=2017"), None).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::BAD_REQUEST, json!("E_MISSING_YEAR")));
    assert_eq!(v["ok"], false);

    // Same scope again.
    let (status, v) = call(&app, "POST", "/databases", Some(json!({"scope_kind": "country", "scope_id": "JO"}))).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::CONFLICT, json!("E_EXISTS")));

    let (status, v) = call(&app, "GET", "/databases/nowhere", None).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::NOT_FOUND, json!("E_UNKNOWN_SCOPE")));
    let (status, v) = call(&app, "POST", "/databases/nowhere/years/2015", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "{v}");

    let (status, v) = call(&app, "GET", "/jobs/999999", None).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::NOT_FOUND, json!("E_NOT_FOUND")));
    let (status, v) = call(&app, "GET", "/no/such/route", None).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::NOT_FOUND, json!("E_NOT_FOUND")));

    let (status, bytes) = call_raw(&app, "POST", "/databases", Some("{not json".into())).await;
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");
    assert_eq!(v["ok"], false);

    let (status, _) = call(&app, "POST", "/years/notayear/download", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, v) = call(&app, "GET", "/catalog/stations?country=XX", None).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::NOT_FOUND, json!("E_UNKNOWN_SCOPE")));

    let (status, v) = call(&app, "POST", "/forecasts", Some(json!({"view": "missing.arff", "mode": "univariate"}))).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::INTERNAL_SERVER_ERROR, json!("E_DISK")));

    // Download with no reachable archive finishes as a failed job.
    let (status, v) = call(&app, "POST", "/years/2015/download", None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = wait_job(&app, v["data"]["id"].as_u64().unwrap()).await;
    assert_eq!((job["state"].clone(), job["error"]["code"].clone()), (json!("failed"), json!("E_NETWORK")));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn second_load_on_same_database_conflicts_until_first_completes() {
    let dir = tempfile::tempdir().unwrap();
    seed_data_dir(dir.path());
    let state = AppState::new(&config(dir.path())).unwrap();
    let app = router(state.clone());
    run_job(&app, "/years/2015/ingest").await;
    let (_, v) = call(&app, "POST", "/databases", Some(json!({"scope_kind": "country", "scope_id": "JO"}))).await;
    let db = v["data"]["name"].as_str().unwrap().to_string();

    // Hold every executor permit so the first job stays queued.
    let permits = state.executor().acquire_many_owned(state.workers() as u32).await.unwrap();
    let (status, v) = call(&app, "POST", &format!("/databases/{db}/years/2015"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let first = v["data"]["id"].as_u64().unwrap();
    assert_eq!(v["data"]["state"], "queued");
    let (status, v) = call(&app, "POST", &format!("/databases/{db}/years/2015"), None).await;
    assert_eq!((status, v["error"]["code"].clone()), (StatusCode::CONFLICT, json!("E_LOCKED")));
    drop(permits);

    assert_eq!(wait_job(&app, first).await["state"], "done");
    // Retrying after completion is accepted and idempotent.
    run_job(&app, &format!("/databases/{db}/years/2015")).await;
    let (_, v) = call(&app, "GET", &format!("/databases/{db}"), None).await;
    assert_eq!(v["data"]["years"], json!([2015]));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn restart_reproduces_get_responses() {
    let dir = tempfile::tempdir().unwrap();
    let (app, db) = prepared(dir.path()).await;
    call(&app, "POST", "/views", Some(json!({"kind": "standard", "db": db, "from": 2015, "to": 2016}))).await;
    let uris = [
        "/health".to_string(),
        "/years".into(),
        "/catalog/regions".into(),
        "/catalog/countries?region=Asia".into(),
        "/catalog/stations?country=JO".into(),
        "/databases".into(),
        format!("/databases/{db}"),
        format!("/databases/{db}/series?variable=rainfall&unit=mm&from=2015&to=2016"),
        format!("/databases/{db}/series?variable=tmin&unit=F&from=2016&to=2016"),
        "/views".into(),
    ];
    let mut before = Vec::new();
    for uri in &uris {
        let (status, bytes) = call_raw(&app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {}", String::from_utf8_lossy(&bytes));
        before.push(bytes);
    }
    drop(app);
    let app = router(AppState::new(&config(dir.path())).unwrap());
    for (uri, old) in uris.iter().zip(&before) {
        let (_, bytes) = call_raw(&app, "GET", uri, None).await;
        assert_eq!(&bytes, old, "{uri}");
    }
}

#[tokio::test]
async fn serves_console_assets_under_ui() {
    let dir = tempfile::tempdir().unwrap();
    let ui = dir.path().join("ui");
    std::fs::create_dir_all(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<html>console</html>").unwrap();
    let mut cfg = config(dir.path());
    cfg.ui_dir = Some(ui);
    let app = router(AppState::new(&cfg).unwrap());
    let (status, bytes) = call_raw(&app, "GET", "/ui/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, b"<html>console</html>");
}
