//! Shared inputs for the benchmarks: the core crate's fixture corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use throwguard_core::kb::{parse_api_page, KnowledgeBase, KnowledgeBaseBuilder};
use throwguard_core::llm::{Cassette, ClientMode, FailingTransport, LlmClient};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// `(file name, contents)` of every fixture page, sorted by name.
pub fn pages() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(fixtures().join("pages"))
        .expect("fixture pages")
        .filter_map(|e| {
            let path = e.ok()?.path();
            let ext = path.extension()?.to_str()?;
            if ext != "html" && ext != "txt" {
                return None;
            }
            let name = path.file_name()?.to_str()?.to_string();
            Some((name, fs::read_to_string(&path).ok()?))
        })
        .collect();
    out.sort();
    out
}

pub fn build_kb(pages: &[(String, String)]) -> KnowledgeBase {
    let mut b = KnowledgeBaseBuilder::new();
    for (name, text) in pages {
        b.add_page(name, parse_api_page(text).expect("fixture page parses"));
    }
    b.build()
}

pub fn java(name: &str) -> String {
    fs::read_to_string(fixtures().join("java").join(name)).expect("fixture source")
}

pub fn replay_client() -> LlmClient {
    let tape = Cassette::open(&fixtures().join("cassettes/walkthrough.jsonl")).expect("cassette");
    LlmClient::new(ClientMode::ReplayStrict)
        .with_cassette(Arc::new(tape))
        .with_transport(Arc::new(FailingTransport))
}
