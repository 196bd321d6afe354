use std::net::SocketAddr;
use std::path::PathBuf;

use wxfuse_core::ingest::DEFAULT_BASE_URL;

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_WORKERS: usize = 2;

#[derive(Debug, Clone)]
pub struct Config {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    /// Concurrent background jobs.
    pub workers: usize,
    pub base_url: String,
    /// Built console assets served under `/ui`.
    pub ui_dir: Option<PathBuf>,
}

impl Config {
    /// `WF_ADDR`, `WF_DATA_DIR`, `WF_WORKERS`, `WF_GHCN_BASE_URL`, `WF_UI_DIR`.
    pub fn from_env() -> Result<Self, String> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let addr = var("WF_ADDR").unwrap_or_else(|| DEFAULT_ADDR.into());
        let addr = addr.parse().map_err(|e| format!("WF_ADDR {addr:?}: {e}"))?;
        let workers = match var("WF_WORKERS") {
            Some(w) => w
                .parse::<usize>()
                .ok()
                .filter(|w| *w > 0)
                .ok_or_else(|| format!("WF_WORKERS {w:?} is not a positive integer"))?,
            None => DEFAULT_WORKERS,
        };
        Ok(Config {
            addr,
            data_dir: var("WF_DATA_DIR").map_or_else(|| PathBuf::from("wf-data"), PathBuf::from),
            workers,
            base_url: var("WF_GHCN_BASE_URL").unwrap_or_else(|| DEFAULT_BASE_URL.into()),
            ui_dir: var("WF_UI_DIR").map(PathBuf::from),
        })
    }
}
