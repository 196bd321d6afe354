//! Document persistence for the world database and the particular-region
//! databases.
//!
//! [`DocumentStore`] is the pluggable contract; [`FileStore`] is the embedded
//! default (one directory per database, one newline-delimited JSON log per
//! collection, a committed-length index per database).

mod docs;
mod file;
mod region;
mod world;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub use docs::{DailyAggDoc, MonthlyFusedDoc, WorldDoc};
pub use file::FileStore;
pub use region::{
    create_region_store, load_region_year, read_monthly_series, region_meta, CreateOptions,
    LoadSummary, RegionMeta, VariableLoad,
};
pub use world::{ingest_year, IngestSummary, WORLD_DB};

/// Held while writing a database; released on drop.
pub struct WriterGuard {
    _inner: Box<dyn Send>,
}

impl WriterGuard {
    pub fn new(inner: impl Send + 'static) -> Self {
        WriterGuard {
            _inner: Box::new(inner),
        }
    }
}

/// Collection-oriented document storage. Documents are opaque JSON lines.
///
/// Readers only ever observe fully committed collections. Writers must hold
/// the database's [`WriterGuard`].
pub trait DocumentStore: Send + Sync {
    /// Create an empty database carrying `meta`. `E_EXISTS` if present.
    fn create_database(&self, db: &str, meta: &Value) -> Result<()>;
    fn drop_database(&self, db: &str) -> Result<()>;
    fn database_exists(&self, db: &str) -> bool;
    fn database_meta(&self, db: &str) -> Result<Value>;
    fn list_databases(&self) -> Result<Vec<String>>;
    fn list_collections(&self, db: &str) -> Result<Vec<String>>;
    /// Document count, `None` when the collection does not exist.
    fn count(&self, db: &str, coll: &str) -> Result<Option<u64>>;
    /// Atomically replace (or create) a collection with `docs`.
    fn replace_collection(
        &self,
        db: &str,
        coll: &str,
        docs: &mut dyn Iterator<Item = Result<String>>,
    ) -> Result<u64>;
    fn append(&self, db: &str, coll: &str, docs: &[String]) -> Result<()>;
    /// Visit each committed document in insertion order.
    fn scan(&self, db: &str, coll: &str, visit: &mut dyn FnMut(&str) -> Result<()>) -> Result<u64>;
    /// Exclusive writer access; `E_LOCKED` when another writer holds it.
    fn lock_writer(&self, db: &str) -> Result<WriterGuard>;
}

pub fn to_line<T: Serialize>(doc: &T) -> Result<String> {
    serde_json::to_string(doc).map_err(|e| Error::malformed(format!("serialise document: {e}")))
}

/// Replace `coll` with typed documents.
pub fn replace_docs<T: Serialize>(
    store: &dyn DocumentStore,
    db: &str,
    coll: &str,
    docs: impl IntoIterator<Item = T>,
) -> Result<u64> {
    let mut lines = docs.into_iter().map(|d| to_line(&d));
    store.replace_collection(db, coll, &mut lines)
}

/// Read a whole collection as typed documents.
pub fn read_docs<T: DeserializeOwned>(store: &dyn DocumentStore, db: &str, coll: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    store.scan(db, coll, &mut |line| {
        out.push(
            serde_json::from_str(line)
                .map_err(|e| Error::malformed(format!("{db}/{coll}: {e}")))?,
        );
        Ok(())
    })?;
    Ok(out)
}
