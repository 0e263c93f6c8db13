//! Long-lived service state shared by the HTTP handlers.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex as StdMutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use postforge_core::classifier::Model;
use postforge_core::ingest::{QuestionRecord, Store};
use postforge_core::matcher::{extract_context, record_assignment, CodingContext, ExpertiseProfile, SourceFile, Weights};
use postforge_core::snippets::{draft_for_question, Corpus, DraftOptions, DraftOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::config::PipelineConfig;
use crate::outbox::{Outbox, OutboxRecord, RecordStatus, SubmitMode};
use crate::pipeline::{run_pipeline, PipelineInputs, PipelineOutcome, PipelineSettings};
use crate::session::{AssignmentSession, SessionState};
use crate::submit::{LiveClient, Submitter, ACCESS_TOKEN_ENV};
use crate::ServiceError;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
pub struct ManualClock(StdMutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(t: DateTime<Utc>) -> Self {
        Self(StdMutex::new(t))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock().unwrap() = t;
    }

    pub fn advance(&self, d: chrono::Duration) {
        let mut t = self.0.lock().unwrap();
        *t += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub max_suggestions_per_day: u32,
    pub weights: Weights,
    pub similarity_floor: f64,
    pub retry_period_secs: u64,
    pub min_lines: usize,
    pub dry_run: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsUpdate {
    pub max_suggestions_per_day: Option<u32>,
    pub weights: Option<Weights>,
    pub similarity_floor: Option<f64>,
    pub retry_period_secs: Option<u64>,
}

/// Everything the service needs, already loaded.
pub struct ServiceParts {
    pub config: PipelineConfig,
    pub questions: Vec<QuestionRecord>,
    pub model: Model,
    pub profile: ExpertiseProfile,
    /// Where profile updates (assignment log) are written back, if anywhere.
    pub profile_path: Option<PathBuf>,
    pub context: CodingContext,
    pub corpus: Corpus,
    pub outbox: Outbox,
    pub submitter: Submitter,
}

struct State {
    settings: Settings,
    profile: ExpertiseProfile,
    sessions: BTreeMap<String, AssignmentSession>,
    active: Option<String>,
    next_poll: Option<DateTime<Utc>>,
    last_outcome: Option<PipelineOutcome>,
    counter: u64,
    rng: ChaCha8Rng,
}

pub struct Service {
    questions: Vec<QuestionRecord>,
    index: BTreeMap<u64, usize>,
    model: Model,
    context: CodingContext,
    corpus: Corpus,
    outbox: Outbox,
    submitter: Submitter,
    profile_path: Option<PathBuf>,
    normalize_clones: bool,
    clock: Arc<dyn Clock>,
    state: Mutex<State>,
}

/// Reads the context sources under `dir` into a coding context.
pub fn load_context(dir: &std::path::Path, extensions: &[String]) -> Result<CodingContext, ServiceError> {
    let exts: Vec<&str> = extensions.iter().map(String::as_str).collect();
    let files = Corpus::load(dir, &exts)?;
    let sources: Vec<SourceFile> = files.files.iter().map(|f| SourceFile::new(&f.path, &f.text)).collect();
    let mut ctx = extract_context(&sources)?;
    ctx.warnings.extend(files.warnings);
    Ok(ctx)
}

pub fn load_profile(path: &std::path::Path) -> Result<ExpertiseProfile, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
    let p: ExpertiseProfile = serde_json::from_str(&text).map_err(|e| ServiceError::Corrupt {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    p.validate()?;
    Ok(p)
}

fn save_profile(path: &std::path::Path, p: &ExpertiseProfile) -> Result<(), ServiceError> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string_pretty(p).expect("profile serializes");
    std::fs::write(&tmp, text).map_err(|e| ServiceError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| ServiceError::io(path, e))
}

impl ServiceParts {
    /// Loads every input named by the config. Live submission needs both
    /// `dry_run = false` in the config and `live` from the caller.
    pub fn load(config: PipelineConfig, live: bool) -> Result<Self, ServiceError> {
        config.validate()?;
        config.check_paths()?;
        let submitter = match (live, config.dry_run) {
            (true, true) => {
                return Err(ServiceError::LiveNotConfigured(
                    "--live needs dry_run = false in the config".into(),
                ))
            }
            (true, false) => {
                let token = std::env::var(ACCESS_TOKEN_ENV)
                    .map_err(|_| ServiceError::LiveNotConfigured(format!("{ACCESS_TOKEN_ENV} is not set")))?;
                let key = std::env::var(postforge_core::ingest::API_KEY_ENV).ok();
                Submitter::Live(
                    LiveClient::new(&config.api_base, &config.site, key, token).map_err(ServiceError::Submission)?,
                )
            }
            (false, false) => {
                tracing::warn!("dry_run = false but --live not given; staying in dry-run mode");
                Submitter::DryRun
            }
            (false, true) => Submitter::DryRun,
        };
        let questions = Store::open_existing(&config.store)?.load_all()?;
        let model = Model::load(&config.model)?;
        let profile = load_profile(&config.profile)?;
        let context = load_context(&config.context, &config.extensions)?;
        for w in &context.warnings {
            tracing::warn!("context: {w}");
        }
        let exts: Vec<&str> = config.extensions.iter().map(String::as_str).collect();
        let corpus = Corpus::load(&config.corpus, &exts)?;
        let outbox = Outbox::open(&config.outbox)?;
        Ok(Self {
            profile_path: Some(config.profile.clone()),
            config,
            questions,
            model,
            profile,
            context,
            corpus,
            outbox,
            submitter,
        })
    }
}

impl Service {
    pub fn new(parts: ServiceParts, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        parts.config.validate()?;
        parts.profile.validate()?;
        parts.model.validate()?;
        let cfg = &parts.config;
        let settings = Settings {
            max_suggestions_per_day: cfg.rate_limit.unwrap_or(parts.profile.max_suggestions_per_day),
            weights: cfg.weights,
            similarity_floor: cfg.similarity_floor,
            retry_period_secs: cfg.retry_period.as_secs(),
            min_lines: cfg.min_lines,
            dry_run: !parts.submitter.is_live(),
        };
        let index = parts
            .questions
            .iter()
            .enumerate()
            .map(|(i, q)| (q.question_id, i))
            .collect();
        Ok(Self {
            index,
            normalize_clones: cfg.normalize_clones,
            state: Mutex::new(State {
                settings,
                profile: parts.profile,
                sessions: BTreeMap::new(),
                active: None,
                next_poll: None,
                last_outcome: None,
                counter: 0,
                rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            }),
            questions: parts.questions,
            model: parts.model,
            context: parts.context,
            corpus: parts.corpus,
            outbox: parts.outbox,
            submitter: parts.submitter,
            profile_path: parts.profile_path,
            clock,
        })
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn question(&self, id: u64) -> Option<&QuestionRecord> {
        self.index.get(&id).map(|&i| &self.questions[i])
    }

    pub fn outbox(&self) -> &Outbox {
        &self.outbox
    }

    fn pipeline_settings(s: &Settings) -> PipelineSettings {
        PipelineSettings {
            weights: s.weights,
            similarity_floor: s.similarity_floor,
            max_suggestions_per_day: s.max_suggestions_per_day,
            retry_period: Duration::from_secs(s.retry_period_secs),
        }
    }

    fn draft(&self, q: &QuestionRecord, min_lines: usize, now: DateTime<Utc>) -> Result<DraftOutcome, ServiceError> {
        let opts = DraftOptions {
            min_lines,
            normalize: self.normalize_clones,
        };
        Ok(draft_for_question(q, &self.corpus, opts, now)?)
    }

    /// Runs one pipeline round and opens a session on success.
    fn poll(&self, st: &mut State, now: DateTime<Utc>) -> Result<(), ServiceError> {
        let settings = Self::pipeline_settings(&st.settings);
        let inputs = PipelineInputs {
            questions: &self.questions,
            model: &self.model,
            profile: &st.profile,
            context: &self.context,
        };
        let outcome = run_pipeline(&inputs, &settings, now, &mut st.rng)?;
        match &outcome {
            PipelineOutcome::NoCandidate { retry_at, .. } => st.next_poll = Some(*retry_at),
            PipelineOutcome::Assigned { candidate, .. } => {
                st.counter += 1;
                let id = format!("s-{:06}", st.counter);
                let mut session = AssignmentSession::new(
                    id.clone(),
                    candidate.question_id,
                    candidate.similarity,
                    candidate.components,
                    st.settings.weights,
                    now,
                );
                let q = self.question(candidate.question_id).expect("candidate comes from the store");
                if !q.code_blocks.is_empty() {
                    if let DraftOutcome::Draft(d) = self.draft(q, st.settings.min_lines, now)? {
                        session.attach_draft(d, now)?;
                    }
                }
                record_assignment(&mut st.profile, now);
                if let Some(p) = &self.profile_path {
                    save_profile(p, &st.profile)?;
                }
                st.sessions.insert(id.clone(), session);
                st.active = Some(id);
                st.next_poll = None;
            }
        }
        st.last_outcome = Some(outcome);
        Ok(())
    }

    /// The active session, polling the pipeline first when none is open and
    /// the retry time has come.
    pub async fn current_assignment(&self) -> Result<Option<AssignmentSession>, ServiceError> {
        let now = self.now();
        let mut st = self.state.lock().await;
        if st.active.is_none() && st.next_poll.is_none_or(|t| now >= t) {
            self.poll(&mut st, now)?;
        }
        Ok(st.active.as_ref().map(|id| st.sessions[id].clone()))
    }

    pub async fn last_outcome(&self) -> Option<PipelineOutcome> {
        self.state.lock().await.last_outcome.clone()
    }

    pub async fn session(&self, id: &str) -> Result<AssignmentSession, ServiceError> {
        let st = self.state.lock().await;
        st.sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn session_mut<'a>(st: &'a mut State, id: &str) -> Result<&'a mut AssignmentSession, ServiceError> {
        st.sessions
            .get_mut(id)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn close_if_terminal(st: &mut State, id: &str) {
        if st.sessions[id].state.is_terminal() && st.active.as_deref() == Some(id) {
            st.active = None;
        }
    }

    /// Re-runs drafting for the session's question.
    pub async fn regenerate_draft(&self, id: &str) -> Result<(AssignmentSession, DraftOutcome), ServiceError> {
        let now = self.now();
        let mut st = self.state.lock().await;
        let min_lines = st.settings.min_lines;
        let s = Self::session_mut(&mut st, id)?;
        if !s.state.allows(SessionState::Drafted) {
            return Err(crate::session::TransitionError {
                session_id: id.to_string(),
                from: s.state,
                to: SessionState::Drafted,
            }
            .into());
        }
        let q = self.question(s.question_id).expect("session question is stored");
        let outcome = self.draft(q, min_lines, now)?;
        if let DraftOutcome::Draft(d) = &outcome {
            s.attach_draft(d.clone(), now)?;
        }
        Ok((s.clone(), outcome))
    }

    pub async fn put_answer(&self, id: &str, body: String) -> Result<AssignmentSession, ServiceError> {
        if body.trim().is_empty() {
            return Err(ServiceError::EmptyAnswer);
        }
        let mut st = self.state.lock().await;
        let s = Self::session_mut(&mut st, id)?;
        s.set_answer(body)?;
        Ok(s.clone())
    }

    /// Approves and submits. A session left approved by a failed live
    /// submission may be approved again to retry.
    pub async fn approve(&self, id: &str) -> Result<(AssignmentSession, OutboxRecord), ServiceError> {
        let now = self.now();
        let mut st = self.state.lock().await;
        let s = Self::session_mut(&mut st, id)?;
        let retry = s.state == SessionState::Approved && s.submission_error.is_some();
        if !retry {
            s.can_approve()?;
        }
        let body = s.submission_body().filter(|b| !b.trim().is_empty()).ok_or(ServiceError::EmptyAnswer)?;
        if !retry {
            s.approve(now)?;
        }
        let mut record = OutboxRecord {
            session_id: s.session_id.clone(),
            question_id: s.question_id,
            answer_body: body,
            submitted_at: now,
            mode: SubmitMode::DryRun,
            status: RecordStatus::Submitted,
            answer_id: None,
            error: None,
        };
        if let Submitter::Live(client) = &self.submitter {
            record.mode = SubmitMode::Live;
            match client.post_answer(s.question_id, &record.answer_body).await {
                Ok(answer_id) => record.answer_id = Some(answer_id),
                Err(e) => {
                    record.status = RecordStatus::Failed;
                    record.error = Some(e.clone());
                    s.submission_error = Some(e.clone());
                    self.outbox.append(&record)?;
                    return Err(ServiceError::Submission(e));
                }
            }
        }
        self.outbox.append(&record)?;
        s.mark_submitted(now)?;
        let out = s.clone();
        Self::close_if_terminal(&mut st, id);
        Ok((out, record))
    }

    pub async fn decline(&self, id: &str) -> Result<AssignmentSession, ServiceError> {
        let now = self.now();
        let mut st = self.state.lock().await;
        let s = Self::session_mut(&mut st, id)?;
        s.decline(now)?;
        let out = s.clone();
        Self::close_if_terminal(&mut st, id);
        Ok(out)
    }

    pub async fn settings(&self) -> Settings {
        self.state.lock().await.settings.clone()
    }

    pub async fn update_settings(&self, u: SettingsUpdate) -> Result<Settings, ServiceError> {
        let mut st = self.state.lock().await;
        let mut s = st.settings.clone();
        if let Some(n) = u.max_suggestions_per_day {
            if n == 0 {
                return Err(ServiceError::InvalidSettings("max_suggestions_per_day must be at least 1".into()));
            }
            s.max_suggestions_per_day = n;
        }
        if let Some(w) = u.weights {
            w.validate()?;
            s.weights = w;
        }
        if let Some(f) = u.similarity_floor {
            if !(0.0..=1.0).contains(&f) {
                return Err(ServiceError::InvalidSettings("similarity_floor must lie in [0, 1]".into()));
            }
            s.similarity_floor = f;
        }
        if let Some(r) = u.retry_period_secs {
            if r == 0 {
                return Err(ServiceError::InvalidSettings("retry_period_secs must be positive".into()));
            }
            s.retry_period_secs = r;
        }
        st.settings = s.clone();
        st.next_poll = None;
        Ok(s)
    }
}
