//! Answer submission. Dry runs only write the outbox; live posting goes to
//! the site's write API and needs an access token.

use std::time::Duration;

use serde::Deserialize;

pub const ACCESS_TOKEN_ENV: &str = "POSTFORGE_ACCESS_TOKEN";

#[derive(Debug, Clone)]
pub struct LiveClient {
    http: reqwest::Client,
    base_url: String,
    site: String,
    key: Option<String>,
    access_token: String,
}

#[derive(Deserialize)]
struct AddAnswerResponse {
    #[serde(default)]
    items: Vec<AddedAnswer>,
    #[serde(default)]
    error_message: Option<String>,
}

#[derive(Deserialize)]
struct AddedAnswer {
    answer_id: u64,
}

impl LiveClient {
    pub fn new(base_url: &str, site: &str, key: Option<String>, access_token: String) -> Result<Self, String> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| e.to_string())?;
        Ok(Self {
            http,
            base_url: base_url.trim_end_matches('/').to_string(),
            site: site.to_string(),
            key,
            access_token,
        })
    }

    /// Posts an answer and returns its id.
    pub async fn post_answer(&self, question_id: u64, body: &str) -> Result<u64, String> {
        let url = format!("{}/questions/{question_id}/answers/add", self.base_url);
        let mut form = vec![
            ("body", body.to_string()),
            ("site", self.site.clone()),
            ("access_token", self.access_token.clone()),
        ];
        if let Some(k) = &self.key {
            form.push(("key", k.clone()));
        }
        let resp = self.http.post(&url).form(&form).send().await.map_err(|e| e.to_string())?;
        let status = resp.status();
        let parsed: AddAnswerResponse = resp.json().await.map_err(|e| format!("{status}: {e}"))?;
        if !status.is_success() {
            return Err(format!("{status}: {}", parsed.error_message.unwrap_or_default()));
        }
        parsed
            .items
            .first()
            .map(|a| a.answer_id)
            .ok_or_else(|| "response carried no answer".to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub enum Submitter {
    #[default]
    DryRun,
    Live(LiveClient),
}

impl Submitter {
    pub fn is_live(&self) -> bool {
        matches!(self, Submitter::Live(_))
    }
}
