//! Append-only JSON-lines store.
//!
//! A record is visible only once its terminating newline is on disk, so a
//! crash mid-write never yields a torn line that parses as valid. Opening a
//! store for append truncates any such trailing fragment first.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use super::records::{Keyed, RecordFilter};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot serialize record: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Single-writer, multi-reader record file. Appends from one process are
/// serialized by an internal lock; no cross-process locking is attempted.
#[derive(Debug)]
pub struct Store<T> {
    path: PathBuf,
    writer: Mutex<Option<File>>,
    _records: PhantomData<fn() -> T>,
}

impl<T> Store<T>
where
    T: Serialize + DeserializeOwned + Keyed,
{
    pub fn open(path: impl Into<PathBuf>) -> Self {
        Store {
            path: path.into(),
            writer: Mutex::new(None),
            _records: PhantomData,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn exists(&self) -> bool {
        self.path.exists()
    }

    fn io_err(&self, source: io::Error) -> StoreError {
        StoreError::Io {
            path: self.path.clone(),
            source,
        }
    }

    fn open_writer(&self) -> Result<File, StoreError> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| self.io_err(e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| self.io_err(e))?;
        let torn = trailing_fragment(&mut file).map_err(|e| self.io_err(e))?;
        if torn > 0 {
            let len = file.metadata().map_err(|e| self.io_err(e))?.len();
            tracing::warn!(path = %self.path.display(), bytes = torn, "dropping torn trailing record");
            file.set_len(len - torn).map_err(|e| self.io_err(e))?;
        }
        Ok(file)
    }

    /// Appends one record and syncs it to disk.
    pub fn append(&self, record: &T) -> Result<(), StoreError> {
        self.append_all(std::slice::from_ref(record))
    }

    /// Appends records in order with a single sync at the end.
    pub fn append_all(&self, records: &[T]) -> Result<(), StoreError> {
        if records.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        let mut guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(self.open_writer()?);
        }
        let file = guard.as_mut().expect("writer opened above");
        file.write_all(&buf).map_err(|e| self.io_err(e))?;
        file.sync_data().map_err(|e| self.io_err(e))
    }

    /// Every complete record, in file order. A missing file reads as empty.
    pub fn read_all(&self) -> Result<Vec<T>, StoreError> {
        self.scan(&RecordFilter::all())
    }

    /// Records matching `filter`, in file order.
    pub fn scan(&self, filter: &RecordFilter) -> Result<Vec<T>, StoreError> {
        let text = match fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                tracing::warn!(path = %self.path.display(), "store does not exist; nothing to scan");
                return Ok(Vec::new());
            }
            Err(e) => return Err(self.io_err(e)),
        };
        let complete = match text.rfind('\n') {
            Some(end) => &text[..=end],
            None => "",
        };
        if complete.len() < text.len() {
            tracing::warn!(path = %self.path.display(), "ignoring torn trailing record");
        }
        let mut out = Vec::new();
        for (i, line) in complete.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: T = serde_json::from_str(line).map_err(|source| StoreError::Parse {
                path: self.path.clone(),
                line: i + 1,
                source,
            })?;
            if filter.matches(&record) {
                out.push(record);
            }
        }
        Ok(out)
    }

    /// Rewrites the store keeping only records for which `keep` is true.
    /// Returns how many were removed. The swap is a rename, so readers see
    /// either the old or the new file.
    pub fn retain(&self, keep: impl Fn(&T) -> bool) -> Result<usize, StoreError> {
        let mut guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let all = self.read_all()?;
        let before = all.len();
        let kept: Vec<&T> = all.iter().filter(|r| keep(r)).collect();
        if kept.len() == before {
            return Ok(0);
        }
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut file = File::create(&tmp).map_err(|e| self.io_err(e))?;
            let mut buf = Vec::new();
            for r in &kept {
                serde_json::to_writer(&mut buf, r)?;
                buf.push(b'\n');
            }
            file.write_all(&buf).map_err(|e| self.io_err(e))?;
            file.sync_all().map_err(|e| self.io_err(e))?;
        }
        fs::rename(&tmp, &self.path).map_err(|e| self.io_err(e))?;
        *guard = None;
        Ok(before - kept.len())
    }
}

// Length of the bytes after the last newline.
fn trailing_fragment(file: &mut File) -> io::Result<u64> {
    let len = file.metadata()?.len();
    if len == 0 {
        return Ok(0);
    }
    let mut tail = 0u64;
    let mut pos = len;
    let mut chunk = [0u8; 4096];
    while pos > 0 {
        let step = pos.min(chunk.len() as u64);
        pos -= step;
        file.seek(SeekFrom::Start(pos))?;
        let buf = &mut chunk[..step as usize];
        file.read_exact(buf)?;
        match buf.iter().rposition(|&b| b == b'\n') {
            Some(i) => return Ok(tail + (step - 1 - i as u64)),
            None => tail += step,
        }
    }
    Ok(tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::{Outcome, VoteRecord};
    use std::sync::Arc;

    fn vote(task: &str) -> VoteRecord {
        VoteRecord::new(task, "a", "b", Outcome::W)
    }

    #[test]
    fn append_then_scan() {
        let dir = tempfile::tempdir().unwrap();
        let store: Store<VoteRecord> = Store::open(dir.path().join("votes.jsonl"));
        store.append(&vote("t1")).unwrap();
        store.append(&vote("t2")).unwrap();
        let hits = store.scan(&RecordFilter::all().task("t2")).unwrap();
        assert_eq!(hits, vec![vote("t2")]);
        assert_eq!(store.read_all().unwrap().len(), 2);
        assert_eq!(store.scan(&RecordFilter::all().model("a")).unwrap().len(), 2);
        assert!(store.scan(&RecordFilter::all().model("z")).unwrap().is_empty());
    }

    #[test]
    fn missing_store_scans_empty() {
        let dir = tempfile::tempdir().unwrap();
        let store: Store<VoteRecord> = Store::open(dir.path().join("nope.jsonl"));
        assert!(store.read_all().unwrap().is_empty());
    }

    #[test]
    fn torn_tail_is_invisible_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("votes.jsonl");
        let line = serde_json::to_string(&vote("t1")).unwrap();
        let torn = serde_json::to_string(&vote("t2")).unwrap();
        // a complete JSON object without its newline is still torn
        fs::write(&path, format!("{line}\n{torn}")).unwrap();
        let store: Store<VoteRecord> = Store::open(&path);
        assert_eq!(store.read_all().unwrap(), vec![vote("t1")]);
        store.append(&vote("t3")).unwrap();
        assert_eq!(store.read_all().unwrap(), vec![vote("t1"), vote("t3")]);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.lines().all(|l| serde_json::from_str::<VoteRecord>(l).is_ok()));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("votes.jsonl");
        let line = serde_json::to_string(&vote("t1")).unwrap();
        fs::write(&path, format!("{line}\n{{oops\n")).unwrap();
        let store: Store<VoteRecord> = Store::open(&path);
        match store.read_all() {
            Err(StoreError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn concurrent_appends_stay_line_intact() {
        let dir = tempfile::tempdir().unwrap();
        let store: Arc<Store<VoteRecord>> = Arc::new(Store::open(dir.path().join("votes.jsonl")));
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let store = Arc::clone(&store);
                std::thread::spawn(move || {
                    for i in 0..50 {
                        store.append(&vote(&format!("t{t}-{i}"))).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let text = fs::read_to_string(store.path()).unwrap();
        assert!(text.ends_with('\n'));
        let parsed: Vec<VoteRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(parsed.len(), 200);
    }

    #[test]
    fn retain_rewrites_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let store: Store<VoteRecord> = Store::open(dir.path().join("votes.jsonl"));
        store.append_all(&[vote("t1"), vote("t2"), vote("t1")]).unwrap();
        assert_eq!(store.retain(|v| v.task_id != "t1").unwrap(), 2);
        store.append(&vote("t4")).unwrap();
        assert_eq!(store.read_all().unwrap(), vec![vote("t2"), vote("t4")]);
    }
}
