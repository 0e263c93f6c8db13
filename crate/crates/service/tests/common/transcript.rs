//! HTTP client over a live router and the scripted review session whose
//! transcript is checked in as a golden file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::Router;
use postforge_service::{router, Service};
use serde_json::{json, Value};

pub async fn spawn(app: Router) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

pub struct Client {
    pub base: String,
    http: reqwest::Client,
}

impl Client {
    pub async fn new(svc: Arc<Service>) -> Self {
        let addr = spawn(router(svc)).await;
        Self {
            base: format!("http://{addr}"),
            http: reqwest::Client::new(),
        }
    }

    pub async fn call(&self, method: &str, path: &str, body: Option<Value>) -> (u16, Value) {
        let url = format!("{}{path}", self.base);
        let mut req = self.http.request(method.parse().unwrap(), url);
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        let text = resp.text().await.unwrap();
        let v = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap_or(Value::String(text)) };
        (status, v)
    }

    pub async fn raw(&self, method: &str, path: &str, body: &str) -> u16 {
        let url = format!("{}{path}", self.base);
        self.http
            .request(method.parse().unwrap(), url)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .await
            .unwrap()
            .status()
            .as_u16()
    }
}

pub fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../service/tests/fixtures/golden_transcript.json")
}

/// Suggest, draft, edit, approve, re-approve on the 20-post fixture;
/// returns every exchange as pretty JSON.
pub async fn scripted_session(outbox: &Path) -> String {
    let (svc, clock) = super::service(outbox);
    let c = Client::new(svc).await;
    let mut log = Vec::new();
    let mut step = |method: &str, path: &str, body: Option<Value>, res: (u16, Value)| {
        log.push(json!({ "request": { "method": method, "path": path, "body": body }, "status": res.0, "response": res.1 }));
        res
    };
    let r = c.call("GET", "/settings", None).await;
    step("GET", "/settings", None, r);
    let r = c.call("GET", "/assignment", None).await;
    let (_, s) = step("GET", "/assignment", None, r);
    let id = s["session_id"].as_str().unwrap().to_string();
    let qid = s["question_id"].as_u64().unwrap();
    let p = format!("/posts/{qid}");
    let r = c.call("GET", &p, None).await;
    step("GET", &p, None, r);
    clock.advance(chrono::Duration::minutes(5));
    let p = format!("/assignment/{id}/draft");
    let r = c.call("POST", &p, None).await;
    step("POST", &p, None, r);
    clock.advance(chrono::Duration::minutes(10));
    let p = format!("/assignment/{id}/answer");
    let b = json!({ "body": "Accumulate the squared deviations, then divide by the count:\n\n    double sd = Math.sqrt(sq / items.length);" });
    let r = c.call("PUT", &p, Some(b.clone())).await;
    step("PUT", &p, Some(b), r);
    clock.advance(chrono::Duration::minutes(1));
    let p = format!("/assignment/{id}/approve");
    let r = c.call("POST", &p, None).await;
    step("POST", &p, None, r);
    let r = c.call("POST", &p, None).await;
    step("POST", &p, None, r);
    let r = c.call("GET", "/assignment", None).await;
    step("GET", "/assignment", None, r);

    serde_json::to_string_pretty(&Value::Array(log)).unwrap() + "\n"
}
