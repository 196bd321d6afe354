//! HTTP facade over the wxfuse engine.
//!
//! Every response uses the envelope `{"ok": true, "data": …}` or
//! `{"ok": false, "error": {"code": "E_…", "message": …}}`. Downloads, ingests
//! and region loads run as background jobs polled through `/jobs/{id}`.

mod api;
pub mod config;
pub mod error;
pub mod jobs;

use std::collections::HashSet;
use std::sync::{Arc, Mutex};

use tokio::sync::{RwLock, Semaphore};
use wxfuse_core::catalog::Catalog;
use wxfuse_core::pipeline::Workspace;

pub use api::router;
pub use config::Config;
pub use error::ApiError;
pub use jobs::{Job, JobKind, JobState, JobTable};

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    workspace: Workspace,
    catalog: RwLock<Option<Arc<Catalog>>>,
    jobs: JobTable,
    executor: Arc<Semaphore>,
    workers: usize,
    /// Keys of queued or running mutating jobs, e.g. `load:<db>`.
    active: Mutex<HashSet<String>>,
    ui_dir: Option<std::path::PathBuf>,
}

impl AppState {
    pub fn new(config: &Config) -> Result<Self, ApiError> {
        let workspace = Workspace::open(&config.data_dir)?.with_base_url(config.base_url.clone());
        Ok(AppState {
            inner: Arc::new(Inner {
                workspace,
                catalog: RwLock::new(None),
                jobs: JobTable::default(),
                executor: Arc::new(Semaphore::new(config.workers.max(1))),
                workers: config.workers.max(1),
                active: Mutex::new(HashSet::new()),
                ui_dir: config.ui_dir.clone(),
            }),
        })
    }

    pub fn workspace(&self) -> &Workspace {
        &self.inner.workspace
    }

    pub fn jobs(&self) -> &JobTable {
        &self.inner.jobs
    }

    /// The job executor's permits. Holding all of them keeps new jobs queued.
    pub fn executor(&self) -> Arc<Semaphore> {
        self.inner.executor.clone()
    }

    pub fn workers(&self) -> usize {
        self.inner.workers
    }

    /// Station catalog, loaded on first use.
    pub async fn catalog(&self) -> Result<Arc<Catalog>, ApiError> {
        if let Some(c) = self.inner.catalog.read().await.as_ref() {
            return Ok(c.clone());
        }
        let mut slot = self.inner.catalog.write().await;
        if let Some(c) = slot.as_ref() {
            return Ok(c.clone());
        }
        let state = self.clone();
        let catalog = Arc::new(blocking(move || state.workspace().catalog().map_err(Into::into)).await?);
        *slot = Some(catalog.clone());
        Ok(catalog)
    }

    /// Queue `work` as a job unless another job holds `key`.
    pub fn submit<F>(&self, kind: JobKind, key: String, message: String, work: F) -> Result<Job, ApiError>
    where
        F: FnOnce(&AppState, &mut dyn FnMut(u8)) -> Result<serde_json::Value, ApiError> + Send + 'static,
    {
        if !self.inner.active.lock().unwrap().insert(key.clone()) {
            return Err(ApiError::busy(format!("a job for {key} is already queued or running")));
        }
        let job = self.inner.jobs.create(kind, message);
        let state = self.clone();
        let id = job.id;
        tokio::spawn(async move {
            let permit = state.inner.executor.clone().acquire_owned().await;
            state.inner.jobs.start(id);
            let worker = state.clone();
            let outcome = tokio::task::spawn_blocking(move || {
                let jobs = worker.inner.jobs.clone();
                work(&worker, &mut |p| jobs.progress(id, p))
            })
            .await
            .unwrap_or_else(|e| Err(ApiError::new(
                axum::http::StatusCode::INTERNAL_SERVER_ERROR,
                "E_INTERNAL",
                format!("job panicked: {e}"),
            )));
            match outcome {
                Ok(v) => state.inner.jobs.finish(id, v),
                Err(e) => state.inner.jobs.fail(id, &e),
            }
            state.inner.active.lock().unwrap().remove(&key);
            drop(permit);
        });
        Ok(job)
    }
}

pub(crate) async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f).await.unwrap_or_else(|e| {
        Err(ApiError::new(
            axum::http::StatusCode::INTERNAL_SERVER_ERROR,
            "E_INTERNAL",
            format!("worker panicked: {e}"),
        ))
    })
}

/// Bind and serve until Ctrl-C.
pub async fn serve(config: Config) -> Result<(), Box<dyn std::error::Error>> {
    let state = AppState::new(&config).map_err(|e| format!("{}: {}", e.code, e.message))?;
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
