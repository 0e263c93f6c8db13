//! Append-only outbox: one JSON file per record.
//!
//! A record is written to a temporary file, synced, then hard-linked to its
//! final name. The link fails if the name exists, so records are never
//! overwritten, and a crash leaves either the whole record or none of it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitMode {
    DryRun,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Submitted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxRecord {
    pub session_id: String,
    pub question_id: u64,
    pub answer_body: String,
    pub submitted_at: DateTime<Utc>,
    pub mode: SubmitMode,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Outbox {
    dir: PathBuf,
}

impl Outbox {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn names(&self) -> Result<Vec<String>, ServiceError> {
        let mut names = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(|e| ServiceError::io(&self.dir, e))? {
            let entry = entry.map_err(|e| ServiceError::io(&self.dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".json") && !name.starts_with('.') {
                names.push(name);
            }
        }
        names.sort();
        Ok(names)
    }

    /// All records in append order.
    pub fn records(&self) -> Result<Vec<OutboxRecord>, ServiceError> {
        self.names()?
            .into_iter()
            .map(|n| {
                let p = self.dir.join(&n);
                let text = fs::read_to_string(&p).map_err(|e| ServiceError::io(&p, e))?;
                serde_json::from_str(&text).map_err(|e| ServiceError::Corrupt {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// Appends a record. A second successful record for one session is
    /// refused.
    pub fn append(&self, record: &OutboxRecord) -> Result<PathBuf, ServiceError> {
        if record.status == RecordStatus::Submitted
            && self
                .records()?
                .iter()
                .any(|r| r.session_id == record.session_id && r.status == RecordStatus::Submitted)
        {
            return Err(ServiceError::AlreadySubmitted(record.session_id.clone()));
        }
        let body = serde_json::to_vec_pretty(record).expect("record serializes");
        let tmp = self.dir.join(format!(".{}.tmp", record.session_id));
        {
            let mut f = fs::File::create(&tmp).map_err(|e| ServiceError::io(&tmp, e))?;
            f.write_all(&body).map_err(|e| ServiceError::io(&tmp, e))?;
            f.sync_all().map_err(|e| ServiceError::io(&tmp, e))?;
        }
        let mut seq = self.names()?.len() + 1;
        let result = loop {
            let path = self.dir.join(format!("{seq:06}-{}.json", record.session_id));
            match fs::hard_link(&tmp, &path) {
                Ok(()) => break Ok(path),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => seq += 1,
                Err(e) => break Err(ServiceError::io(&path, e)),
            }
        };
        let _ = fs::remove_file(&tmp);
        result
    }
}
