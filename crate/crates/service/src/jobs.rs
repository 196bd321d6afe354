use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Download,
    Ingest,
    LoadRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Job {
    pub id: u64,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: u8,
    pub message: String,
    /// Milliseconds since the Unix epoch.
    pub created_ms: u64,
    pub updated_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<serde_json::Value>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or_default()
}

/// In-memory job table. Progress only moves forward and terminal states are
/// never left.
#[derive(Clone, Default)]
pub struct JobTable {
    inner: Arc<Mutex<(u64, HashMap<u64, Job>)>>,
}

impl JobTable {
    pub fn create(&self, kind: JobKind, message: impl Into<String>) -> Job {
        let mut g = self.inner.lock().unwrap();
        g.0 += 1;
        let t = now_ms();
        let job = Job {
            id: g.0,
            kind,
            state: JobState::Queued,
            progress: 0,
            message: message.into(),
            created_ms: t,
            updated_ms: t,
            result: None,
            error: None,
        };
        g.1.insert(job.id, job.clone());
        job
    }

    pub fn get(&self, id: u64) -> Option<Job> {
        self.inner.lock().unwrap().1.get(&id).cloned()
    }

    pub fn list(&self) -> Vec<Job> {
        let mut jobs: Vec<Job> = self.inner.lock().unwrap().1.values().cloned().collect();
        jobs.sort_by_key(|j| j.id);
        jobs
    }

    fn update(&self, id: u64, f: impl FnOnce(&mut Job)) {
        if let Some(job) = self.inner.lock().unwrap().1.get_mut(&id) {
            if !job.state.is_terminal() {
                f(job);
                job.updated_ms = now_ms();
            }
        }
    }

    pub fn start(&self, id: u64) {
        self.update(id, |j| j.state = JobState::Running);
    }

    pub fn progress(&self, id: u64, pct: u8) {
        self.update(id, |j| j.progress = j.progress.max(pct.min(100)));
    }

    pub fn finish(&self, id: u64, result: serde_json::Value) {
        self.update(id, |j| {
            j.state = JobState::Done;
            j.progress = 100;
            j.result = Some(result);
        });
    }

    pub fn fail(&self, id: u64, error: &ApiError) {
        self.update(id, |j| {
            j.state = JobState::Failed;
            j.message = error.message.clone();
            j.error = Some(error.body());
        });
    }
}
