//! Record types for questions, answers and users as they sit in the store.

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// A question together with its answers and owner metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: u64,
    pub title: String,
    pub body: String,
    #[serde(default)]
    pub code_blocks: Vec<String>,
    pub tags: Vec<String>,
    pub creation_date: DateTime<Utc>,
    pub last_activity_date: DateTime<Utc>,
    pub score: i64,
    pub view_count: u64,
    #[serde(default)]
    pub favorite_count: u64,
    #[serde(default)]
    pub comment_count: u64,
    #[serde(default)]
    pub accepted_answer_id: Option<u64>,
    #[serde(default)]
    pub answers: Vec<AnswerRecord>,
    #[serde(default)]
    pub asker_reputation: u64,
    #[serde(default)]
    pub closed_or_deleted: bool,
    /// Snapshot time of the counters (view count, scores, reputations).
    pub as_of: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub answer_id: u64,
    pub score: i64,
    #[serde(default)]
    pub comment_count: u64,
    #[serde(default)]
    pub answerer_reputation: u64,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub code_blocks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: u64,
    pub reputation: u64,
    pub top_tags: Vec<String>,
}

/// A type-invariant violation found while validating a record.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordViolation {
    #[error("question id must be positive")]
    ZeroQuestionId,
    #[error("question has no tags")]
    NoTags,
    #[error("tag {0:?} is not lowercase")]
    TagNotLowercase(String),
    #[error("last activity precedes creation")]
    ActivityBeforeCreation,
    #[error("answer id must be positive")]
    ZeroAnswerId,
    #[error("answer id {0} repeated")]
    DuplicateAnswerId(u64),
    #[error("accepted answer id must be positive")]
    ZeroAcceptedId,
}

impl QuestionRecord {
    /// Checks the type invariants. A dangling accepted answer id is not a
    /// violation; see [`QuestionRecord::has_dangling_accepted_answer`].
    pub fn validate(&self) -> Result<(), RecordViolation> {
        if self.question_id == 0 {
            return Err(RecordViolation::ZeroQuestionId);
        }
        if self.tags.is_empty() {
            return Err(RecordViolation::NoTags);
        }
        if let Some(tag) = self.tags.iter().find(|t| t.to_lowercase() != **t) {
            return Err(RecordViolation::TagNotLowercase(tag.clone()));
        }
        if self.last_activity_date < self.creation_date {
            return Err(RecordViolation::ActivityBeforeCreation);
        }
        if self.accepted_answer_id == Some(0) {
            return Err(RecordViolation::ZeroAcceptedId);
        }
        let mut seen = HashSet::new();
        for a in &self.answers {
            if a.answer_id == 0 {
                return Err(RecordViolation::ZeroAnswerId);
            }
            if !seen.insert(a.answer_id) {
                return Err(RecordViolation::DuplicateAnswerId(a.answer_id));
            }
        }
        Ok(())
    }

    pub fn has_dangling_accepted_answer(&self) -> bool {
        match self.accepted_answer_id {
            Some(id) => !self.answers.iter().any(|a| a.answer_id == id),
            None => false,
        }
    }
}

impl UserProfile {
    /// Lowercases and de-duplicates `top_tags`, keeping first occurrence order.
    pub fn normalized(mut self) -> Self {
        let mut seen = HashSet::new();
        self.top_tags = self
            .top_tags
            .into_iter()
            .map(|t| t.to_lowercase())
            .filter(|t| seen.insert(t.clone()))
            .collect();
        self
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn sample(id: u64) -> QuestionRecord {
        let t0 = Utc.with_ymd_and_hms(2015, 3, 1, 12, 0, 0).unwrap();
        QuestionRecord {
            question_id: id,
            title: format!("question {id}"),
            body: "<p>How?</p><pre><code>int a = 0;</code></pre>".into(),
            code_blocks: vec!["int a = 0;".into()],
            tags: vec!["java".into()],
            creation_date: t0,
            last_activity_date: t0 + chrono::Duration::days(30),
            score: 2,
            view_count: 100,
            favorite_count: 0,
            comment_count: 1,
            accepted_answer_id: Some(id * 10),
            answers: vec![AnswerRecord {
                answer_id: id * 10,
                score: 3,
                comment_count: 0,
                answerer_reputation: 1200,
                body: "use a cast".into(),
                code_blocks: vec![],
            }],
            asker_reputation: 15,
            closed_or_deleted: false,
            as_of: t0 + chrono::Duration::days(400),
        }
    }

    #[test]
    fn valid_sample_passes() {
        assert_eq!(sample(1).validate(), Ok(()));
    }

    #[test]
    fn violations_detected() {
        let mut q = sample(1);
        q.tags.clear();
        assert_eq!(q.validate(), Err(RecordViolation::NoTags));

        let mut q = sample(1);
        q.last_activity_date = q.creation_date - chrono::Duration::seconds(1);
        assert_eq!(q.validate(), Err(RecordViolation::ActivityBeforeCreation));

        let mut q = sample(1);
        let dup = q.answers[0].clone();
        q.answers.push(dup);
        assert_eq!(q.validate(), Err(RecordViolation::DuplicateAnswerId(10)));

        let mut q = sample(1);
        q.tags = vec!["Java".into()];
        assert!(matches!(q.validate(), Err(RecordViolation::TagNotLowercase(_))));
    }

    #[test]
    fn dangling_accepted_answer_is_flagged_not_rejected() {
        let mut q = sample(2);
        q.accepted_answer_id = Some(999);
        assert!(q.validate().is_ok());
        assert!(q.has_dangling_accepted_answer());
        assert!(!sample(2).has_dangling_accepted_answer());
    }

    #[test]
    fn profile_tags_normalized() {
        let p = UserProfile {
            user_id: 1,
            reputation: 10,
            top_tags: vec!["Java".into(), "android".into(), "java".into()],
        }
        .normalized();
        assert_eq!(p.top_tags, vec!["java", "android"]);
    }
}
