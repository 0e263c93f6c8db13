//! Expertise, staleness and rate-limit filters, and the sequential-trial
//! assignment.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::score::ScoredCandidate;
use super::MatchError;
use crate::ingest::QuestionRecord;

pub const STALENESS_DAYS: i64 = 90;
pub const MAX_ASSIGN_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertiseProfile {
    pub top_tags: BTreeSet<String>,
    pub max_suggestions_per_day: u32,
    #[serde(default)]
    pub last_assignment_time: Option<DateTime<Utc>>,
    /// Times of past assignments, oldest first.
    #[serde(default)]
    pub assignment_log: Vec<DateTime<Utc>>,
}

impl Default for ExpertiseProfile {
    fn default() -> Self {
        Self {
            top_tags: BTreeSet::new(),
            max_suggestions_per_day: 1,
            last_assignment_time: None,
            assignment_log: Vec::new(),
        }
    }
}

impl ExpertiseProfile {
    pub fn new<I, S>(tags: I, max_per_day: u32) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            top_tags: tags.into_iter().map(Into::into).collect(),
            max_suggestions_per_day: max_per_day,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        if self.max_suggestions_per_day == 0 {
            return Err(MatchError::InvalidProfile("max_suggestions_per_day must be at least 1".into()));
        }
        if let Some(t) = self.top_tags.iter().find(|t| t.is_empty() || **t != t.to_lowercase()) {
            return Err(MatchError::InvalidProfile(format!("tag {t:?} must be non-empty lowercase")));
        }
        Ok(())
    }
}

/// Every tag of the question is one of the developer's top tags.
pub fn expertise_filter(q: &QuestionRecord, p: &ExpertiseProfile) -> bool {
    !p.top_tags.is_empty() && !q.tags.is_empty() && q.tags.iter().all(|t| p.top_tags.contains(t))
}

/// No activity for at least 90 days (inclusive).
pub fn staleness_filter(q: &QuestionRecord, now: DateTime<Utc>) -> bool {
    now - q.last_activity_date >= Duration::days(STALENESS_DAYS)
}

fn window_start(now: DateTime<Utc>) -> DateTime<Utc> {
    now - Duration::hours(24)
}

/// Fewer than `max_suggestions_per_day` assignments in the trailing 24h.
pub fn rate_limit_check(p: &ExpertiseProfile, now: DateTime<Utc>) -> bool {
    let start = window_start(now);
    let mut recent = p.assignment_log.iter().filter(|t| **t > start && **t <= now).count();
    if recent == 0 {
        // profiles carrying only the last time still count it
        recent = usize::from(p.last_assignment_time.is_some_and(|t| t > start && t <= now));
    }
    recent < p.max_suggestions_per_day as usize
}

/// Appends an assignment and drops log entries older than the window.
pub fn record_assignment(p: &mut ExpertiseProfile, now: DateTime<Utc>) {
    let start = window_start(now);
    p.assignment_log.retain(|t| *t > start);
    p.assignment_log.push(now);
    p.last_assignment_time = Some(now);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub question_id: u64,
    pub trials: u64,
    /// The trial cap ran out and the most similar candidate was taken.
    pub fallback: bool,
}

/// Walks the candidates in order, accepting candidate i with probability
/// `similarity_i`, and restarts from the top after the last one. Zero
/// similarities are never accepted. After `MAX_ASSIGN_TRIALS` trials the
/// most similar candidate is returned.
pub fn assign<R: Rng + ?Sized>(candidates: &[ScoredCandidate], rng: &mut R) -> Result<Assignment, MatchError> {
    let live: Vec<&ScoredCandidate> = candidates
        .iter()
        .filter(|c| c.similarity.is_finite() && c.similarity > 0.0)
        .collect();
    if live.is_empty() {
        return Err(MatchError::NoAssignableCandidate);
    }
    let mut trials = 0;
    while trials < MAX_ASSIGN_TRIALS {
        for c in &live {
            trials += 1;
            if rng.gen::<f64>() < c.similarity {
                return Ok(Assignment {
                    question_id: c.question_id,
                    trials,
                    fallback: false,
                });
            }
            if trials >= MAX_ASSIGN_TRIALS {
                break;
            }
        }
    }
    let best = live
        .iter()
        .max_by(|a, b| a.similarity.total_cmp(&b.similarity).then(b.question_id.cmp(&a.question_id)))
        .expect("non-empty");
    Ok(Assignment {
        question_id: best.question_id,
        trials,
        fallback: true,
    })
}
