use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{to_line, DocumentStore, WorldDoc};
use crate::error::{Error, IoContext, Result};
use crate::ingest::{DailyReader, IngestPolicy, IngestStats};

/// Name of the worldwide database.
pub const WORLD_DB: &str = "world";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub year: i32,
    pub docs: u64,
    pub stats: IngestStats,
    /// Rows dated outside `year`, skipped.
    pub wrong_year: u64,
}

/// Load a decompressed by-year CSV into the world database as collection
/// `<year>`, replacing any previous load of that year.
pub fn ingest_year(
    store: &dyn DocumentStore,
    csv: &Path,
    year: i32,
    policy: IngestPolicy,
    progress: &mut dyn FnMut(u8),
) -> Result<IngestSummary> {
    let _guard = store.lock_writer(WORLD_DB)?;
    if !store.database_exists(WORLD_DB) {
        store.create_database(WORLD_DB, &serde_json::json!({ "kind": "world" }))?;
    }
    let file = File::open(csv).at(csv)?;
    let total = file.metadata().at(csv)?.len().max(1);
    let mut reader = DailyReader::new(BufReader::with_capacity(1 << 20, file), policy);
    let mut wrong_year = 0u64;
    let mut last_pct = 0u8;
    progress(0);

    let mut docs = std::iter::from_fn(|| loop {
        let obs = match reader.next()? {
            Ok(obs) => obs,
            Err(e) => return Some(Err(Error::disk(csv, e))),
        };
        let pct = ((reader.stats().bytes * 99) / total).min(99) as u8;
        if pct > last_pct {
            last_pct = pct;
            progress(pct);
        }
        if obs.date.year() != year {
            wrong_year += 1;
            continue;
        }
        return Some(to_line(&WorldDoc {
            station_id: obs.station_id,
            date: obs.date.format("%Y%m%d").to_string(),
            element: obs.element.code().to_string(),
            value: obs.value,
            obs_time: obs.obs_time,
        }));
    });
    let count = store.replace_collection(WORLD_DB, &year.to_string(), &mut docs)?;
    drop(docs);
    progress(100);
    Ok(IngestSummary {
        year,
        docs: count,
        stats: reader.stats(),
        wrong_year,
    })
}
