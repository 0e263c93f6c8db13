//! Acquisition of question records from the Stack Exchange API or from an
//! offline dump, and their persistence in a local [`Store`].
//!
//! A dump file uses the store's own format: one JSON [`QuestionRecord`] per
//! line. Ingest is keyed by question id, so re-ingesting a dump is a no-op.

mod api;
mod code_blocks;
pub(crate) mod record;
mod store;
mod throttle;

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;

pub use api::{ApiAnswer, ApiClient, ApiConfig, ApiQuestion, Wrapper, API_KEY_ENV, DEFAULT_BASE_URL};
pub use code_blocks::{extract_code_blocks, strip_html, CodeBlocks};
pub use record::{AnswerRecord, QuestionRecord, RecordViolation, UserProfile};
pub use store::{Store, StoreWriter};
pub use throttle::TokenBucket;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("store directory {0} does not exist")]
    MissingStore(PathBuf),
    #[error("store is locked by another writer ({0})")]
    StoreLocked(PathBuf),
    #[error("corrupt store file {path} line {line}: {message}")]
    CorruptStore {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::Transport { .. } | Self::StoreLocked(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Api,
    Dump,
}

#[derive(Debug, Clone, Default)]
pub struct FetchRequest {
    /// Keep only questions carrying this tag (case-insensitive).
    pub tag: Option<String>,
    /// Inclusive window on last activity.
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
    /// Maximum number of API pages; ignored for dumps.
    pub page_limit: u32,
}

impl FetchRequest {
    fn admits(&self, q: &QuestionRecord) -> bool {
        let tag_ok = self
            .tag
            .as_ref()
            .is_none_or(|t| q.tags.iter().any(|x| x.eq_ignore_ascii_case(t)));
        let from_ok = self.from.is_none_or(|f| q.last_activity_date >= f);
        let to_ok = self.to.is_none_or(|t| q.last_activity_date <= t);
        tag_ok && from_ok && to_ok
    }
}

/// Counts for one ingest run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub read: usize,
    pub stored: usize,
    pub excluded_closed: usize,
    pub out_of_range: usize,
    /// Undecodable input, one message per skipped item.
    pub malformed: Vec<String>,
    /// Records that decoded but broke a type invariant.
    pub quarantined: usize,
    /// Question ids whose accepted answer is not among the stored answers.
    pub dangling_accepted: Vec<u64>,
}

/// Filters, validates and normalizes decoded records, quarantining invalid
/// ones. Returns the admitted records.
fn admit(
    records: Vec<QuestionRecord>,
    req: &FetchRequest,
    writer: &mut StoreWriter,
    report: &mut IngestReport,
) -> Result<Vec<QuestionRecord>, IngestError> {
    let mut out = Vec::with_capacity(records.len());
    for mut q in records {
        if q.closed_or_deleted {
            report.excluded_closed += 1;
            continue;
        }
        if !req.admits(&q) {
            report.out_of_range += 1;
            continue;
        }
        if let Err(v) = q.validate() {
            report.quarantined += 1;
            let raw = serde_json::to_string(&q).expect("record serializes");
            writer.quarantine(&raw, &v.to_string())?;
            continue;
        }
        if q.code_blocks.is_empty() {
            q.code_blocks = extract_code_blocks(&q.body).blocks;
        }
        if q.has_dangling_accepted_answer() {
            report.dangling_accepted.push(q.question_id);
        }
        out.push(q);
    }
    Ok(out)
}

/// Reads a dump file (store line format) into the store.
pub fn ingest_dump(
    dump: &Path,
    req: &FetchRequest,
    store: &Store,
) -> Result<(Vec<QuestionRecord>, IngestReport), IngestError> {
    let text = std::fs::read_to_string(dump).map_err(|e| IngestError::io(dump, e))?;
    let mut writer = store.writer()?;
    let mut report = IngestReport::default();
    let mut decoded = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.read += 1;
        match parse_dump_line(line) {
            Ok(q) => decoded.push(q),
            Err(e) => {
                report.malformed.push(format!("line {}: {e}", n + 1));
                writer.quarantine(line, &format!("malformed: {e}"))?;
            }
        }
    }
    let admitted = admit(decoded, req, &mut writer, &mut report)?;
    report.stored = admitted.len();
    writer.upsert(admitted.clone())?;
    Ok((admitted, report))
}

/// Decodes one dump/store line.
pub fn parse_dump_line(line: &str) -> Result<QuestionRecord, serde_json::Error> {
    serde_json::from_str(line)
}

/// Fetches from the configured source and persists the admitted records.
pub async fn fetch_questions(
    req: &FetchRequest,
    source: SourceSpec<'_>,
    store: &Store,
) -> Result<(Vec<QuestionRecord>, IngestReport), IngestError> {
    match source {
        SourceSpec::Dump(path) => ingest_dump(path, req, store),
        SourceSpec::Api(cfg) => {
            let client = ApiClient::new(cfg.clone())?;
            let (records, mut report) = client.fetch(req, Utc::now()).await?;
            let mut writer = store.writer()?;
            let admitted = admit(records, req, &mut writer, &mut report)?;
            report.stored = admitted.len();
            writer.upsert(admitted.clone())?;
            Ok((admitted, report))
        }
    }
}

pub enum SourceSpec<'a> {
    Api(&'a ApiConfig),
    Dump(&'a Path),
}
