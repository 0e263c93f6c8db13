#![allow(dead_code)]

pub mod transcript;

use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Duration, TimeZone, Utc};
use postforge_core::classifier::{train_tree, Model, Sample, TreeParams};
use postforge_core::features::{FeatureName, Label, FEATURE_COUNT};
use postforge_core::ingest::{AnswerRecord, QuestionRecord, Store};
use postforge_core::matcher::{extract_context, ExpertiseProfile, SourceFile};
use postforge_core::snippets::Corpus;
use postforge_service::{ManualClock, Outbox, PipelineConfig, Service, ServiceParts, Submitter};

pub const STATS_JAVA: &str = "package demo;

import java.util.List;

class Stats {
    static double sd(int[] items) {
        int total = 0;
        for (int i = 0; i < items.length; i++) {
            total += items[i];
        }
        double mean = total / (double) items.length;
        double sq = 0;
        for (int i = 0; i < items.length; i++) {
            sq += (items[i] - mean) * (items[i] - mean);
        }
        double sd = Math.sqrt(sq / items.length);
        return sd;
    }

    static String join(List<String> parts) {
        StringBuilder sb = new StringBuilder();
        for (String p : parts) {
            sb.append(p).append(',');
        }
        return sb.toString();
    }
}
";

const SD_BODY: &str = "int total = 0;
for (int i = 0; i < items.length; i++) {
    total += items[i];
}
double mean = total / (double) items.length;
double sq = 0;
for (int i = 0; i < items.length; i++) {
    sq += (items[i] - mean) * (items[i] - mean);
}
double sd = Math.sqrt(sq / items.length);
System.out.println(sd);";

const SD_HALF: &str = "int total = 0;
for (int i = 0; i < items.length; i++) {
    total += items[i];
}
double mean = total / (double) items.length;";

const JOIN: &str = "StringBuilder sb = new StringBuilder();
for (String p : parts) {
    sb.append(p).append(',');
}
String s = sb.toString();";

const HTTP: &str = "HttpURLConnection conn = (HttpURLConnection) url.openConnection();
conn.setRequestMethod(\"GET\");
InputStream in = conn.getInputStream();";

pub fn now() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 6, 1, 12, 0, 0).unwrap()
}

/// Twenty posts: five code templates, a quarter answered, the last four
/// recently active, and every seventh also tagged `jni`.
pub fn posts() -> Vec<QuestionRecord> {
    let templates: [(&str, Option<&str>); 5] = [
        ("Standard deviation of an int array", Some(SD_BODY)),
        ("Mean of items in a loop", Some(SD_HALF)),
        ("Join strings with a comma", Some(JOIN)),
        ("Read an HTTP response", Some(HTTP)),
        ("How do I compute the standard deviation of items", None),
    ];
    (0..20u64)
        .map(|i| {
            let (title, code) = templates[(i % 5) as usize];
            let id = 101 + i;
            let answered = i % 4 == 3;
            let stale = i < 16;
            let created = now() - Duration::days(400);
            let last = if stale { now() - Duration::days(120 + i as i64) } else { now() - Duration::days(3) };
            let mut tags = vec!["java".to_string()];
            if i % 7 == 6 {
                tags.push("jni".into());
            }
            let code_blocks: Vec<String> = code.map(|c| vec![c.to_string()]).unwrap_or_default();
            let body = match code {
                Some(c) => format!("<p>{title}?</p><pre><code>{c}</code></pre>"),
                None => format!("<p>{title}? I sum the items and take the mean.</p>"),
            };
            let answers = if answered {
                vec![AnswerRecord {
                    answer_id: id * 10,
                    score: 4,
                    comment_count: 1,
                    answerer_reputation: 900,
                    body: "<p>use streams</p>".into(),
                    code_blocks: vec![],
                }]
            } else {
                vec![]
            };
            QuestionRecord {
                question_id: id,
                title: title.to_string(),
                body,
                code_blocks,
                tags,
                creation_date: created,
                last_activity_date: last,
                score: if answered { 5 } else { 0 },
                view_count: 50 + 10 * i,
                favorite_count: 0,
                comment_count: i % 3,
                accepted_answer_id: answered.then_some(id * 10),
                answers,
                asker_reputation: 20 + i,
                closed_or_deleted: false,
                as_of: now(),
            }
        })
        .collect()
}

/// A tree that predicts YES exactly when the post has no accepted answer.
pub fn model() -> Model {
    let samples: Vec<Sample> = (0..20)
        .map(|i| {
            let mut x = [0.0; FEATURE_COUNT];
            let haa = i % 2 == 0;
            x[FeatureName::Haa.index()] = f64::from(u8::from(haa));
            x[FeatureName::Vc.index()] = f64::from(i);
            Sample {
                x,
                y: if haa { Label::No } else { Label::Yes },
            }
        })
        .collect();
    Model::Dt(train_tree(&samples, &FeatureName::ALL, TreeParams::with_cp(0.01)).unwrap())
}

pub fn profile() -> ExpertiseProfile {
    ExpertiseProfile::new(["java", "android"], 1)
}

pub fn config() -> PipelineConfig {
    PipelineConfig {
        seed: 42,
        ..PipelineConfig::default()
    }
}

pub fn parts(outbox: &Path) -> ServiceParts {
    let context = extract_context(&[SourceFile::new("Stats.java", STATS_JAVA)]).unwrap();
    ServiceParts {
        config: config(),
        questions: posts(),
        model: model(),
        profile: profile(),
        profile_path: None,
        context,
        corpus: Corpus::from_sources([("demo/Stats.java", STATS_JAVA)]),
        outbox: Outbox::open(outbox).unwrap(),
        submitter: Submitter::DryRun,
    }
}

pub fn service(outbox: &Path) -> (Arc<Service>, Arc<ManualClock>) {
    service_with(parts(outbox))
}

pub fn service_with(parts: ServiceParts) -> (Arc<Service>, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(now()));
    let svc = Service::new(parts, clock.clone()).unwrap();
    (Arc::new(svc), clock)
}

/// Writes store, model, profile, sources and a config file under `dir`.
pub fn write_fixture(dir: &Path) -> std::path::PathBuf {
    let store = Store::open(dir.join("store")).unwrap();
    store.writer().unwrap().upsert(posts()).unwrap();
    model().save(&dir.join("model.json")).unwrap();
    std::fs::write(dir.join("profile.json"), serde_json::to_string(&profile()).unwrap()).unwrap();
    std::fs::create_dir_all(dir.join("src/demo")).unwrap();
    std::fs::write(dir.join("src/demo/Stats.java"), STATS_JAVA).unwrap();
    let conf = dir.join("postforge.conf");
    std::fs::write(
        &conf,
        "# fixture\nstore = store\nmodel = model.json\nprofile = profile.json\ncontext = src\noutbox = outbox\nseed = 42\n",
    )
    .unwrap();
    conf
}
