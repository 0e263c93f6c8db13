//! Replays the checked-in fuzz corpus, plus deterministic truncations and
//! byte flips of every seed, through the fuzz target bodies.

#[path = "../../../fuzz/src/lib.rs"]
mod targets;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus_dir(target: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target)
}

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(corpus_dir(target))
        .unwrap_or_else(|e| panic!("corpus for {target}: {e}"))
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn every_target_has_seeds() {
    for (name, _) in targets::TARGETS {
        assert!(!seeds(name).is_empty(), "{name} has no seeds");
    }
}

#[test]
fn seeds_replay_cleanly() {
    for (name, run) in targets::TARGETS {
        for (path, data) in seeds(name) {
            let r = std::panic::catch_unwind(|| run(&data));
            assert!(r.is_ok(), "{name} panicked on {path}");
        }
    }
}

#[test]
fn mutated_seeds_replay_cleanly() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (name, run) in targets::TARGETS {
        for (path, data) in seeds(name) {
            for k in 0..40 {
                let mut d = data.clone();
                if k % 2 == 0 && !d.is_empty() {
                    d.truncate(rng.gen_range(0..d.len()));
                } else {
                    for _ in 0..rng.gen_range(1..4) {
                        if d.is_empty() {
                            break;
                        }
                        let i = rng.gen_range(0..d.len());
                        d[i] = rng.gen();
                    }
                }
                let r = std::panic::catch_unwind(|| run(&d));
                assert!(r.is_ok(), "{name} panicked on mutation {k} of {path}: {d:?}");
            }
        }
    }
}

#[test]
fn well_formed_seeds_parse() {
    let read = |t: &str, f: &str| std::fs::read_to_string(corpus_dir(t).join(f)).unwrap();
    postforge_core::ingest::parse_dump_line(&read("dump_line", "with_answers.json")).unwrap();
    postforge_core::features::parse_dataset(&read("dataset", "two_rows.jsonl")).unwrap();
    assert_eq!(postforge_core::features::parse_vote_sheets(&read("votes", "sheets.jsonl")).unwrap().len(), 2);
    postforge_core::classifier::Model::from_json(&read("model_json", "tree.json")).unwrap();
    postforge_service::PipelineConfig::parse(&read("config_file", "full.conf"), std::path::Path::new("/x")).unwrap();
    serde_json::from_str::<postforge_service::OutboxRecord>(&read("outbox_record", "dry_run.json")).unwrap();
    let page: postforge_core::ingest::Wrapper<postforge_core::ingest::ApiQuestion> =
        serde_json::from_str(&read("api_response", "page.json")).unwrap();
    assert_eq!(page.items.len(), 1);
}
