//! Stack Exchange API client.
//!
//! Questions are paged through `/questions` sorted by last activity within the
//! requested window; answers are fetched in batches of up to 100 question ids
//! through `/questions/{ids}/answers`. Every request goes through the token
//! bucket, and any `backoff` the server sends is honored before the next call.

use std::collections::HashMap;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::code_blocks::extract_code_blocks;
use super::record::{AnswerRecord, QuestionRecord};
use super::throttle::TokenBucket;
use super::{FetchRequest, IngestError, IngestReport};

pub const DEFAULT_BASE_URL: &str = "https://api.stackexchange.com/2.3";
pub const API_KEY_ENV: &str = "POSTFORGE_SE_KEY";

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub base_url: String,
    pub site: String,
    pub key: Option<String>,
    /// Named API filter; must include question/answer bodies and comment counts.
    pub filter: String,
    pub requests_per_minute: u32,
    pub max_attempts: u32,
    pub page_size: u32,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            site: "stackoverflow".to_string(),
            key: std::env::var(API_KEY_ENV).ok(),
            filter: "withbody".to_string(),
            requests_per_minute: 25,
            max_attempts: 4,
            page_size: 100,
        }
    }
}

/// Response wrapper shared by every API method.
#[derive(Debug, Deserialize)]
pub struct Wrapper<T> {
    #[serde(default = "Vec::new")]
    pub items: Vec<T>,
    #[serde(default)]
    pub has_more: bool,
    #[serde(default)]
    pub backoff: Option<u64>,
    #[serde(default)]
    pub quota_remaining: Option<i64>,
    #[serde(default)]
    pub error_id: Option<u32>,
    #[serde(default)]
    pub error_message: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct ApiOwner {
    #[serde(default)]
    pub reputation: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct ApiQuestion {
    pub question_id: u64,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub tags: Vec<String>,
    pub creation_date: i64,
    pub last_activity_date: i64,
    #[serde(default)]
    pub score: i64,
    #[serde(default)]
    pub view_count: u64,
    #[serde(default)]
    pub favorite_count: u64,
    #[serde(default)]
    pub comment_count: u64,
    #[serde(default)]
    pub accepted_answer_id: Option<u64>,
    #[serde(default)]
    pub owner: ApiOwner,
    #[serde(default)]
    pub closed_date: Option<i64>,
    #[serde(default)]
    pub answers: Option<Vec<ApiAnswer>>,
}

#[derive(Debug, Deserialize)]
pub struct ApiAnswer {
    pub answer_id: u64,
    pub question_id: u64,
    #[serde(default)]
    pub score: i64,
    #[serde(default)]
    pub comment_count: u64,
    #[serde(default)]
    pub owner: ApiOwner,
    #[serde(default)]
    pub body: String,
}

fn timestamp(secs: i64) -> Option<DateTime<Utc>> {
    DateTime::from_timestamp(secs, 0)
}

impl ApiAnswer {
    fn into_record(self) -> AnswerRecord {
        let code_blocks = extract_code_blocks(&self.body).blocks;
        AnswerRecord {
            answer_id: self.answer_id,
            score: self.score,
            comment_count: self.comment_count,
            answerer_reputation: self.owner.reputation.unwrap_or(0),
            body: self.body,
            code_blocks,
        }
    }
}

impl ApiQuestion {
    /// Normalizes an API item; `None` when its timestamps are unrepresentable.
    pub fn into_record(self, answers: Vec<ApiAnswer>, as_of: DateTime<Utc>) -> Option<QuestionRecord> {
        let code_blocks = extract_code_blocks(&self.body).blocks;
        let answers = self
            .answers
            .unwrap_or_default()
            .into_iter()
            .chain(answers)
            .fold(Vec::<AnswerRecord>::new(), |mut acc, a| {
                if !acc.iter().any(|x| x.answer_id == a.answer_id) {
                    acc.push(a.into_record());
                }
                acc
            });
        Some(QuestionRecord {
            question_id: self.question_id,
            title: self.title,
            body: self.body,
            code_blocks,
            tags: self.tags.into_iter().map(|t| t.to_lowercase()).collect(),
            creation_date: timestamp(self.creation_date)?,
            last_activity_date: timestamp(self.last_activity_date)?,
            score: self.score,
            view_count: self.view_count,
            favorite_count: self.favorite_count,
            comment_count: self.comment_count,
            accepted_answer_id: self.accepted_answer_id,
            answers,
            asker_reputation: self.owner.reputation.unwrap_or(0),
            closed_or_deleted: self.closed_date.is_some(),
            as_of,
        })
    }
}

pub struct ApiClient {
    http: reqwest::Client,
    cfg: ApiConfig,
    bucket: TokenBucket,
}

impl ApiClient {
    pub fn new(cfg: ApiConfig) -> Result<Self, IngestError> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| IngestError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        let bucket = TokenBucket::per_minute(cfg.requests_per_minute);
        Ok(Self { http, cfg, bucket })
    }

    async fn get<T: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        params: &[(&str, String)],
    ) -> Result<Wrapper<T>, IngestError> {
        let url = format!("{}{}", self.cfg.base_url.trim_end_matches('/'), path);
        let mut query: Vec<(&str, String)> = params.to_vec();
        query.push(("site", self.cfg.site.clone()));
        query.push(("filter", self.cfg.filter.clone()));
        if let Some(key) = &self.cfg.key {
            query.push(("key", key.clone()));
        }
        let mut last_error = String::new();
        for attempt in 1..=self.cfg.max_attempts {
            self.bucket.acquire().await;
            let resp = match self.http.get(&url).query(&query).send().await {
                Ok(r) => r,
                Err(e) => {
                    last_error = e.to_string();
                    self.bucket.hold(retry_delay(attempt)).await;
                    continue;
                }
            };
            let status = resp.status();
            let text = match resp.text().await {
                Ok(t) => t,
                Err(e) => {
                    last_error = e.to_string();
                    self.bucket.hold(retry_delay(attempt)).await;
                    continue;
                }
            };
            let wrapper: Option<Wrapper<T>> = serde_json::from_str(&text).ok();
            if let Some(secs) = wrapper.as_ref().and_then(|w| w.backoff) {
                self.bucket.hold(Duration::from_secs(secs)).await;
            }
            let wrapper = match wrapper {
                Some(w) if status.is_success() && w.error_id.is_none() => return Ok(w),
                other => other,
            };
            last_error = match &wrapper {
                Some(Wrapper { error_id: Some(id), error_message, .. }) => {
                    format!("HTTP {status}: error {id} {}", error_message.as_deref().unwrap_or(""))
                }
                _ => format!("HTTP {status}: undecodable body"),
            };
            let server_backoff = wrapper.as_ref().and_then(|w| w.backoff).is_some();
            if (status == reqwest::StatusCode::TOO_MANY_REQUESTS && !server_backoff) || status.is_server_error() {
                self.bucket.hold(retry_delay(attempt)).await;
            }
            tracing::warn!(attempt, %url, error = %last_error, "api request failed");
        }
        Err(IngestError::Transport {
            attempts: self.cfg.max_attempts,
            message: last_error,
        })
    }

    /// Fetches questions (and their answers) whose last activity falls in the
    /// request window. Closed questions and undecodable items are counted in
    /// the report and dropped.
    pub async fn fetch(
        &self,
        req: &FetchRequest,
        as_of: DateTime<Utc>,
    ) -> Result<(Vec<QuestionRecord>, IngestReport), IngestError> {
        let mut report = IngestReport::default();
        let mut raw_questions = Vec::new();
        for page in 1..=req.page_limit.max(1) {
            let mut params = vec![
                ("page", page.to_string()),
                ("pagesize", self.cfg.page_size.to_string()),
                ("order", "desc".to_string()),
                ("sort", "activity".to_string()),
            ];
            if let Some(tag) = &req.tag {
                params.push(("tagged", tag.clone()));
            }
            if let Some(from) = req.from {
                params.push(("min", from.timestamp().to_string()));
            }
            if let Some(to) = req.to {
                params.push(("max", to.timestamp().to_string()));
            }
            let w: Wrapper<serde_json::Value> = self.get("/questions", &params).await?;
            raw_questions.extend(w.items);
            if !w.has_more {
                break;
            }
        }

        let mut questions = Vec::new();
        for item in raw_questions {
            report.read += 1;
            match serde_json::from_value::<ApiQuestion>(item) {
                Ok(q) => questions.push(q),
                Err(e) => report.malformed.push(e.to_string()),
            }
        }

        let mut answers: HashMap<u64, Vec<ApiAnswer>> = HashMap::new();
        let ids: Vec<u64> = questions
            .iter()
            .filter(|q| q.answers.is_none())
            .map(|q| q.question_id)
            .collect();
        for chunk in ids.chunks(100) {
            let joined = chunk.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
            let path = format!("/questions/{joined}/answers");
            let mut page = 1;
            loop {
                let params = [
                    ("page", page.to_string()),
                    ("pagesize", self.cfg.page_size.to_string()),
                ];
                let w: Wrapper<serde_json::Value> = self.get(&path, &params).await?;
                for item in w.items {
                    match serde_json::from_value::<ApiAnswer>(item) {
                        Ok(a) => answers.entry(a.question_id).or_default().push(a),
                        Err(e) => report.malformed.push(format!("answer: {e}")),
                    }
                }
                if !w.has_more {
                    break;
                }
                page += 1;
            }
        }

        let mut records = Vec::new();
        for q in questions {
            let id = q.question_id;
            let extra = answers.remove(&id).unwrap_or_default();
            match q.into_record(extra, as_of) {
                Some(r) => records.push(r),
                None => report.malformed.push(format!("question {id}: bad timestamp")),
            }
        }
        Ok((records, report))
    }
}

fn retry_delay(attempt: u32) -> Duration {
    Duration::from_millis(500 * 2u64.pow(attempt.min(6)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_api_question_json() {
        let json = r#"{
            "tags": ["Java", "casting"], "owner": {"reputation": 1523, "user_id": 7},
            "is_answered": true, "view_count": 581000, "accepted_answer_id": 11,
            "answer_count": 1, "score": 22, "last_activity_date": 1571040000,
            "creation_date": 1250600000, "question_id": 1302605, "comment_count": 2,
            "favorite_count": 4, "title": "How do I convert from int to Long in Java?",
            "body": "<pre><code>Long l = i;</code></pre>",
            "answers": [{"answer_id": 11, "question_id": 1302605, "score": 40,
                          "comment_count": 1, "owner": {"reputation": 9000}, "body": "x"}]
        }"#;
        let q: ApiQuestion = serde_json::from_str(json).unwrap();
        let as_of = DateTime::from_timestamp(1_600_000_000, 0).unwrap();
        let r = q.into_record(vec![], as_of).unwrap();
        assert_eq!(r.tags, vec!["java", "casting"]);
        assert_eq!(r.code_blocks, vec!["Long l = i;"]);
        assert_eq!(r.answers.len(), 1);
        assert_eq!(r.answers[0].answerer_reputation, 9000);
        assert_eq!(r.asker_reputation, 1523);
        assert!(!r.closed_or_deleted);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn closed_date_marks_closed() {
        let json = r#"{"question_id": 5, "creation_date": 1, "last_activity_date": 2,
                       "tags": ["java"], "closed_date": 3}"#;
        let q: ApiQuestion = serde_json::from_str(json).unwrap();
        let r = q.into_record(vec![], Utc::now()).unwrap();
        assert!(r.closed_or_deleted);
    }
}
