//! Bodies of the fuzz targets. Each takes raw bytes, must never panic on
//! malformed input, and asserts cheap invariants on whatever parses.
//!
//! Kept free of libfuzzer so the corpus replay test in the workspace can
//! include this file directly.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{TimeZone, Utc};
use postforge_core::classifier::Model;
use postforge_core::features::{parse_dataset, parse_vote_sheets, FEATURE_COUNT};
use postforge_core::ingest::{extract_code_blocks, parse_dump_line, ApiQuestion, QuestionRecord, Wrapper};
use postforge_core::matcher::ExpertiseProfile;
use postforge_core::snippets::{build_statement_graph, lex};
use postforge_service::config::parse_duration;
use postforge_service::{OutboxRecord, PipelineConfig, SettingsUpdate};

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn lex_source(data: &[u8]) {
    let src = String::from_utf8_lossy(data);
    let ts = lex(&src);
    assert!(ts.tokens.windows(2).all(|w| w[0].line <= w[1].line));
    assert!(ts.tokens.iter().all(|t| !t.text.is_empty() && t.line >= 1));
}

pub fn code_blocks(data: &[u8]) {
    if let Some(body) = text(data) {
        let cb = extract_code_blocks(body);
        assert!(cb.blocks.len() <= body.len());
    }
}

pub fn dump_line(data: &[u8]) {
    let Some(line) = text(data) else { return };
    if let Ok(q) = parse_dump_line(line) {
        let _ = q.validate();
        let again: QuestionRecord = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(again, q);
    }
}

pub fn api_response(data: &[u8]) {
    if let Ok(w) = serde_json::from_slice::<Wrapper<ApiQuestion>>(data) {
        let as_of = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        for item in w.items {
            if let Some(q) = item.into_record(Vec::new(), as_of) {
                let ids: BTreeSet<u64> = q.answers.iter().map(|a| a.answer_id).collect();
                assert_eq!(ids.len(), q.answers.len());
            }
        }
    }
}

pub fn config_file(data: &[u8]) {
    let Some(t) = text(data) else { return };
    if let Ok(cfg) = PipelineConfig::parse(t, Path::new("/fuzz")) {
        let _ = cfg.validate();
    }
    for line in t.lines() {
        let _ = parse_duration(line.trim());
    }
}

pub fn votes(data: &[u8]) {
    if let Some(t) = text(data) {
        let _ = parse_vote_sheets(t);
    }
}

pub fn dataset(data: &[u8]) {
    if let Some(t) = text(data) {
        if let Ok(rows) = parse_dataset(t) {
            assert!(rows.len() <= t.lines().count());
        }
    }
}

pub fn statement_graph(data: &[u8]) {
    let src = String::from_utf8_lossy(data);
    let g = build_statement_graph(&lex(&src));
    let n = g.statements.len();
    assert!(g.edges.windows(2).all(|w| w[0] < w[1]));
    assert!(g.edges.iter().all(|&(a, b)| a < b && b <= n));
    for id in 1..=n.min(16) {
        let seed = BTreeSet::from([id]);
        let back = g.backward_slice(&seed).unwrap();
        let fwd = g.forward_slice(&seed).unwrap();
        assert!(back.contains(&id) && fwd.contains(&id));
        assert!(back.iter().all(|&s| s <= id) && fwd.iter().all(|&s| s >= id));
    }
}

pub fn model_json(data: &[u8]) {
    let Some(t) = text(data) else { return };
    if let Ok(m) = Model::from_json(t) {
        if m.validate().is_ok() {
            let _ = m.predict_row(&[0.0; FEATURE_COUNT]);
            let _ = m.predict_row(&[1.0; FEATURE_COUNT]);
        }
    }
}

pub fn outbox_record(data: &[u8]) {
    let _ = serde_json::from_slice::<OutboxRecord>(data);
}

pub fn profile(data: &[u8]) {
    if let Ok(p) = serde_json::from_slice::<ExpertiseProfile>(data) {
        let _ = p.validate();
    }
}

pub fn settings_update(data: &[u8]) {
    let _ = serde_json::from_slice::<SettingsUpdate>(data);
}

type Target = fn(&[u8]);

/// Target name to body, for corpus replay.
pub const TARGETS: [(&str, Target); 12] = [
    ("lex", lex_source),
    ("code_blocks", code_blocks),
    ("dump_line", dump_line),
    ("api_response", api_response),
    ("config_file", config_file),
    ("votes", votes),
    ("dataset", dataset),
    ("statement_graph", statement_graph),
    ("model_json", model_json),
    ("outbox_record", outbox_record),
    ("profile", profile),
    ("settings_update", settings_update),
];
