use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DocumentStore, WriterGuard};
use crate::error::{Error, IoContext, Result};

const INDEX: &str = "index.json";

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    #[serde(default)]
    meta: Value,
    #[serde(default)]
    generation: u64,
    #[serde(default)]
    collections: BTreeMap<String, Entry>,
}

/// Committed extent of one collection log.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    file: String,
    docs: u64,
    bytes: u64,
}

/// Embedded store rooted at a directory.
///
/// ```text
/// <root>/<db>/index.json          meta + committed (file, docs, bytes) per collection
/// <root>/<db>/<coll>.<gen>.jsonl  newline-delimited JSON documents
/// <root>/.locks/<db>.lock         writer lock (holds the owner's pid)
/// ```
///
/// The index rename is the commit point: bytes past an entry's committed
/// length are invisible to readers and discarded by the next append.
pub struct FileStore {
    root: PathBuf,
    index_mutex: Mutex<()>,
}

fn check_db_name(db: &str) -> Result<()> {
    let bad = db.is_empty()
        || db.starts_with('.')
        || db.chars().any(|c| matches!(c, '/' | '\\' | '\0') || c.is_control());
    if bad {
        Err(Error::malformed(format!("invalid database name {db:?}")))
    } else {
        Ok(())
    }
}

fn check_coll_name(coll: &str) -> Result<()> {
    if !coll.is_empty() && coll.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        Ok(())
    } else {
        Err(Error::malformed(format!("invalid collection name {coll:?}")))
    }
}

fn unique_suffix() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default()
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).at(&root)?;
        Ok(FileStore {
            root,
            index_mutex: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn db_dir(&self, db: &str) -> PathBuf {
        self.root.join(db)
    }

    fn read_index(&self, db: &str) -> Result<Index> {
        check_db_name(db)?;
        let path = self.db_dir(db).join(INDEX);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(Error::UnknownScope(format!("database {db}")))
            }
            Err(e) => return Err(Error::disk(path, e)),
        };
        serde_json::from_str(&text).map_err(|e| Error::malformed(format!("{}: {e}", path.display())))
    }

    fn write_index(&self, db: &str, index: &Index) -> Result<()> {
        let dir = self.db_dir(db);
        let tmp = dir.join(format!("{INDEX}.{}.tmp", unique_suffix()));
        let path = dir.join(INDEX);
        let mut bytes = serde_json::to_vec_pretty(index).expect("index serialises");
        bytes.push(b'\n');
        {
            let mut f = File::create(&tmp).at(&tmp)?;
            f.write_all(&bytes).at(&tmp)?;
            f.sync_all().at(&tmp)?;
        }
        fs::rename(&tmp, &path).at(&path)
    }

    fn lock_index(&self) -> std::sync::MutexGuard<'_, ()> {
        self.index_mutex.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Point `coll` at a freshly written file and drop the previous one.
    fn commit_entry(&self, db: &str, coll: &str, entry: Entry) -> Result<()> {
        let old = {
            let _g = self.lock_index();
            let mut index = self.read_index(db)?;
            index.generation += 1;
            let old = index.collections.insert(coll.to_string(), entry.clone());
            self.write_index(db, &index)?;
            old
        };
        if let Some(old) = old.filter(|o| o.file != entry.file) {
            let _ = fs::remove_file(self.db_dir(db).join(old.file));
        }
        Ok(())
    }

    fn new_file_name(&self, db: &str, coll: &str) -> Result<String> {
        let index = self.read_index(db)?;
        Ok(format!("{coll}.{}-{}.jsonl", index.generation + 1, unique_suffix()))
    }

    fn open_committed(&self, db: &str, coll: &str) -> Result<Option<(File, Entry)>> {
        // A concurrent replace may delete the file between reading the index
        // and opening it; the second attempt sees the new index.
        for _ in 0..3 {
            let index = self.read_index(db)?;
            let Some(entry) = index.collections.get(coll).cloned() else {
                return Ok(None);
            };
            let path = self.db_dir(db).join(&entry.file);
            match File::open(&path) {
                Ok(f) => return Ok(Some((f, entry))),
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => return Err(Error::disk(path, e)),
            }
        }
        Err(Error::malformed(format!("{db}/{coll}: collection file vanished")))
    }
}

struct LockFile(PathBuf);

impl Drop for LockFile {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn pid_alive(pid: u32) -> bool {
    let proc_root = Path::new("/proc");
    !proc_root.exists() || proc_root.join(pid.to_string()).exists()
}

impl DocumentStore for FileStore {
    fn create_database(&self, db: &str, meta: &Value) -> Result<()> {
        check_db_name(db)?;
        let dir = self.db_dir(db);
        if dir.join(INDEX).exists() {
            return Err(Error::Exists(format!("database {db}")));
        }
        fs::create_dir_all(&dir).at(&dir)?;
        let _g = self.lock_index();
        self.write_index(
            db,
            &Index {
                meta: meta.clone(),
                ..Index::default()
            },
        )
    }

    fn drop_database(&self, db: &str) -> Result<()> {
        check_db_name(db)?;
        let dir = self.db_dir(db);
        match fs::remove_dir_all(&dir) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(Error::disk(dir, e)),
        }
    }

    fn database_exists(&self, db: &str) -> bool {
        check_db_name(db).is_ok() && self.db_dir(db).join(INDEX).exists()
    }

    fn database_meta(&self, db: &str) -> Result<Value> {
        Ok(self.read_index(db)?.meta)
    }

    fn list_databases(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).at(&self.root)? {
            let entry = entry.at(&self.root)?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.starts_with('.') && entry.path().join(INDEX).exists() {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }

    fn list_collections(&self, db: &str) -> Result<Vec<String>> {
        Ok(self.read_index(db)?.collections.into_keys().collect())
    }

    fn count(&self, db: &str, coll: &str) -> Result<Option<u64>> {
        Ok(self.read_index(db)?.collections.get(coll).map(|e| e.docs))
    }

    fn replace_collection(
        &self,
        db: &str,
        coll: &str,
        docs: &mut dyn Iterator<Item = Result<String>>,
    ) -> Result<u64> {
        check_coll_name(coll)?;
        let file = self.new_file_name(db, coll)?;
        let path = self.db_dir(db).join(&file);
        let written = (|| {
            let mut out = BufWriter::with_capacity(1 << 20, File::create(&path).at(&path)?);
            let (mut n, mut bytes) = (0u64, 0u64);
            for doc in docs {
                let doc = doc?;
                debug_assert!(!doc.contains('\n'));
                out.write_all(doc.as_bytes()).at(&path)?;
                out.write_all(b"\n").at(&path)?;
                n += 1;
                bytes += doc.len() as u64 + 1;
            }
            let f = out.into_inner().map_err(|e| Error::disk(&path, e.into_error()))?;
            f.sync_all().at(&path)?;
            Ok((n, bytes))
        })();
        let (docs, bytes) = match written {
            Ok(v) => v,
            Err(e) => {
                let _ = fs::remove_file(&path);
                return Err(e);
            }
        };
        self.commit_entry(db, coll, Entry { file, docs, bytes })?;
        Ok(docs)
    }

    fn append(&self, db: &str, coll: &str, docs: &[String]) -> Result<()> {
        check_coll_name(coll)?;
        let _g = self.lock_index();
        let mut index = self.read_index(db)?;
        let dir = self.db_dir(db);
        let entry = match index.collections.get(coll) {
            Some(e) => e.clone(),
            None => Entry {
                file: format!("{coll}.{}-{}.jsonl", index.generation + 1, unique_suffix()),
                docs: 0,
                bytes: 0,
            },
        };
        let path = dir.join(&entry.file);
        let mut f = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .at(&path)?;
        f.set_len(entry.bytes).at(&path)?;
        f.seek(SeekFrom::Start(entry.bytes)).at(&path)?;
        let mut buf = Vec::new();
        for doc in docs {
            buf.extend_from_slice(doc.as_bytes());
            buf.push(b'\n');
        }
        f.write_all(&buf).at(&path)?;
        f.sync_all().at(&path)?;
        index.generation += 1;
        index.collections.insert(
            coll.to_string(),
            Entry {
                file: entry.file,
                docs: entry.docs + docs.len() as u64,
                bytes: entry.bytes + buf.len() as u64,
            },
        );
        self.write_index(db, &index)
    }

    fn scan(&self, db: &str, coll: &str, visit: &mut dyn FnMut(&str) -> Result<()>) -> Result<u64> {
        let Some((file, entry)) = self.open_committed(db, coll)? else {
            return Err(Error::UnknownScope(format!("collection {db}/{coll}")));
        };
        let path = self.db_dir(db).join(&entry.file);
        let mut reader = BufReader::with_capacity(1 << 20, file.take(entry.bytes));
        let mut line = String::new();
        let mut n = 0;
        while n < entry.docs {
            line.clear();
            if reader.read_line(&mut line).at(&path)? == 0 {
                return Err(Error::malformed(format!("{db}/{coll}: log shorter than its index")));
            }
            visit(line.trim_end_matches('\n'))?;
            n += 1;
        }
        Ok(n)
    }

    fn lock_writer(&self, db: &str) -> Result<WriterGuard> {
        check_db_name(db)?;
        let dir = self.root.join(".locks");
        fs::create_dir_all(&dir).at(&dir)?;
        let path = dir.join(format!("{db}.lock"));
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    write!(f, "{}", std::process::id()).at(&path)?;
                    return Ok(WriterGuard::new(LockFile(path)));
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    let owner = fs::read_to_string(&path).ok().and_then(|s| s.trim().parse::<u32>().ok());
                    match owner {
                        Some(pid) if !pid_alive(pid) => {
                            log::warn!("removing stale lock {} held by dead pid {pid}", path.display());
                            let _ = fs::remove_file(&path);
                        }
                        _ => return Err(Error::Locked(db.to_string())),
                    }
                }
                Err(e) => return Err(Error::disk(path, e)),
            }
        }
        Err(Error::Locked(db.to_string()))
    }
}
