#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use throwguard_core::kb::{parse_api_page, KnowledgeBase, KnowledgeBaseBuilder};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn java(name: &str) -> String {
    fs::read_to_string(fixtures().join("java").join(name)).unwrap()
}

/// Knowledge base over every fixture page.
pub fn fixture_kb() -> KnowledgeBase {
    let mut paths: Vec<PathBuf> = fs::read_dir(fixtures().join("pages"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("html" | "txt")))
        .collect();
    paths.sort();
    let mut b = KnowledgeBaseBuilder::new();
    for p in paths {
        let entries = parse_api_page(&fs::read_to_string(&p).unwrap()).unwrap();
        b.add_page(p.file_name().unwrap().to_str().unwrap(), entries);
    }
    b.build()
}

use std::sync::Arc;

use throwguard_core::chain::CodingTask;
use throwguard_core::llm::{Cassette, ClientMode, FailingTransport, LlmClient};

pub fn walkthrough_cassette() -> Arc<Cassette> {
    Arc::new(Cassette::open(&fixtures().join("cassettes/walkthrough.jsonl")).unwrap())
}

/// Strict replay over the walkthrough cassette; any miss that reached the
/// network would fail through [`FailingTransport`].
pub fn replay_client() -> LlmClient {
    LlmClient::new(ClientMode::ReplayStrict)
        .with_cassette(walkthrough_cassette())
        .with_transport(Arc::new(FailingTransport))
}

pub fn corpus(name: &str) -> Vec<CodingTask> {
    fs::read_to_string(fixtures().join("corpus").join(name))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn swap_task() -> CodingTask {
    corpus("walkthrough.jsonl").remove(0)
}
