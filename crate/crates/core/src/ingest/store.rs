//! Directory-backed question store.
//!
//! Layout:
//! - `records.jsonl`: one [`QuestionRecord`] per line, sorted by question id
//! - `index.json`: question id -> byte offset of its line in `records.jsonl`
//! - `quarantine.jsonl`: rejected input lines with the reason
//!
//! Writers hold `writer.lock` for the lifetime of a [`StoreWriter`]; files are
//! replaced by write-then-rename so readers never observe a partial file.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::QuestionRecord;
use super::IngestError;

const RECORDS: &str = "records.jsonl";
const INDEX: &str = "index.json";
const QUARANTINE: &str = "quarantine.jsonl";
const LOCK: &str = "writer.lock";

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct QuarantineEntry<'a> {
    reason: String,
    raw: &'a str,
}

impl Store {
    /// Opens (creating if needed) a store directory.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, IngestError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| IngestError::io(&dir, e))?;
        Ok(Self { dir })
    }

    /// Opens an existing store without creating anything.
    pub fn open_existing(dir: impl AsRef<Path>) -> Result<Self, IngestError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(IngestError::MissingStore(dir));
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn records_path(&self) -> PathBuf {
        self.dir.join(RECORDS)
    }

    pub fn load_all(&self) -> Result<Vec<QuestionRecord>, IngestError> {
        let path = self.records_path();
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(IngestError::io(&path, e)),
        };
        let mut out = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| IngestError::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| IngestError::CorruptStore {
                path: path.clone(),
                line: n + 1,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }

    pub fn index(&self) -> Result<BTreeMap<u64, u64>, IngestError> {
        let path = self.dir.join(INDEX);
        match fs::read_to_string(&path) {
            Ok(s) => serde_json::from_str(&s).map_err(|e| IngestError::CorruptStore {
                path,
                line: 0,
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(IngestError::io(&path, e)),
        }
    }

    /// Random access through the offset index.
    pub fn get(&self, question_id: u64) -> Result<Option<QuestionRecord>, IngestError> {
        let Some(&offset) = self.index()?.get(&question_id) else {
            return Ok(None);
        };
        let path = self.records_path();
        let mut file = File::open(&path).map_err(|e| IngestError::io(&path, e))?;
        file.seek(SeekFrom::Start(offset))
            .map_err(|e| IngestError::io(&path, e))?;
        let mut line = String::new();
        BufReader::new(file)
            .read_line(&mut line)
            .map_err(|e| IngestError::io(&path, e))?;
        let rec: QuestionRecord =
            serde_json::from_str(&line).map_err(|e| IngestError::CorruptStore {
                path,
                line: 0,
                message: e.to_string(),
            })?;
        Ok((rec.question_id == question_id).then_some(rec))
    }

    pub fn writer(&self) -> Result<StoreWriter, IngestError> {
        let lock = self.dir.join(LOCK);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => IngestError::StoreLocked(lock.clone()),
                _ => IngestError::io(&lock, e),
            })?;
        Ok(StoreWriter {
            store: self.clone(),
            lock,
        })
    }

    pub fn quarantined(&self) -> Result<Vec<(String, String)>, IngestError> {
        let path = self.dir.join(QUARANTINE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(IngestError::io(&path, e)),
        };
        Ok(text
            .lines()
            .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
            .map(|v| {
                (
                    v["reason"].as_str().unwrap_or_default().to_string(),
                    v["raw"].as_str().unwrap_or_default().to_string(),
                )
            })
            .collect())
    }
}

/// Exclusive write handle; releases the lock file on drop.
#[derive(Debug)]
pub struct StoreWriter {
    store: Store,
    lock: PathBuf,
}

impl StoreWriter {
    /// Inserts or replaces records keyed by question id and rewrites the
    /// store. Returns the number of records in the store afterwards.
    pub fn upsert(&mut self, records: Vec<QuestionRecord>) -> Result<usize, IngestError> {
        let mut merged: BTreeMap<u64, QuestionRecord> = self
            .store
            .load_all()?
            .into_iter()
            .map(|r| (r.question_id, r))
            .collect();
        for r in records {
            merged.insert(r.question_id, r);
        }
        self.rewrite(merged.values())?;
        Ok(merged.len())
    }

    fn rewrite<'a>(
        &mut self,
        records: impl Iterator<Item = &'a QuestionRecord>,
    ) -> Result<(), IngestError> {
        let dir = &self.store.dir;
        let tmp = dir.join(format!("{RECORDS}.tmp"));
        let mut index = BTreeMap::new();
        {
            let file = File::create(&tmp).map_err(|e| IngestError::io(&tmp, e))?;
            let mut w = BufWriter::new(file);
            let mut offset = 0u64;
            for r in records {
                let line = serde_json::to_string(r).expect("records serialize");
                index.insert(r.question_id, offset);
                w.write_all(line.as_bytes())
                    .and_then(|_| w.write_all(b"\n"))
                    .map_err(|e| IngestError::io(&tmp, e))?;
                offset += line.len() as u64 + 1;
            }
            let file = w.into_inner().map_err(|e| IngestError::io(&tmp, e.into_error()))?;
            file.sync_all().map_err(|e| IngestError::io(&tmp, e))?;
        }
        let idx_tmp = dir.join(format!("{INDEX}.tmp"));
        fs::write(&idx_tmp, serde_json::to_vec(&index).expect("index serializes"))
            .map_err(|e| IngestError::io(&idx_tmp, e))?;
        fs::rename(&tmp, dir.join(RECORDS)).map_err(|e| IngestError::io(&tmp, e))?;
        fs::rename(&idx_tmp, dir.join(INDEX)).map_err(|e| IngestError::io(&idx_tmp, e))?;
        Ok(())
    }

    pub fn quarantine(&mut self, raw: &str, reason: &str) -> Result<(), IngestError> {
        let path = self.store.dir.join(QUARANTINE);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| IngestError::io(&path, e))?;
        let entry = QuarantineEntry {
            reason: reason.to_string(),
            raw,
        };
        writeln!(f, "{}", serde_json::to_string(&entry).expect("entry serializes"))
            .map_err(|e| IngestError::io(&path, e))
    }
}

impl Drop for StoreWriter {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
