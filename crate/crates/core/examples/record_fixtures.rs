//! Regenerates the checked-in walkthrough cassette.
//!
//! Responses come from a scripted transport, so recording never needs the
//! network. Requests are produced by the real chain and evaluation code,
//! which keeps cassette keys in step with the prompts.
//!
//! cargo run -p throwguard-core --example record_fixtures

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use throwguard_core::chain::{CheckerKind, CodingTask, PromptMode, GENERAL_PROMPT};
use throwguard_core::kb::{parse_api_page, KnowledgeBase, KnowledgeBaseBuilder};
use throwguard_core::llm::{Cassette, ClientMode, LlmClient, Role, ScriptedTransport};
use throwguard_core::{llm_eva, quality_matrix, run_chain, ChainConfig};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn java(name: &str) -> String {
    fs::read_to_string(fixtures().join("java").join(name)).expect("fixture source")
}

fn reply(code: &str) -> String {
    format!("Here is the method:\n\n```java\n{}\n```\n\nIt swaps the elements in place.", code.trim_end())
}

fn kb() -> KnowledgeBase {
    let mut paths: Vec<PathBuf> = fs::read_dir(fixtures().join("pages"))
        .expect("pages dir")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("html" | "txt")))
        .collect();
    paths.sort();
    let mut b = KnowledgeBaseBuilder::new();
    for p in paths {
        let entries = parse_api_page(&fs::read_to_string(&p).expect("page")).expect("fixture page parses");
        b.add_page(p.file_name().and_then(|n| n.to_str()).expect("utf-8 name"), entries);
    }
    b.build()
}

fn transport() -> ScriptedTransport {
    let a = reply(&java("variant_a_incomplete.java"));
    let d = reply(&java("variant_d_good.java"));
    // Y/N questions first: they also mention the API signatures.
    ScriptedTransport::new()
        .rule(|req| {
            let last = req.messages.iter().rev().find(|m| m.role == Role::User)?;
            if !last.content.starts_with("Is the ") {
                return None;
            }
            let guarded = req
                .messages
                .iter()
                .rev()
                .find(|m| m.role == Role::Assistant && m.content.contains("```"))
                .is_some_and(|m| m.content.contains("throw new ArrayIndexOutOfBoundsException"));
            Some(if guarded { "Y".to_string() } else { "N, the index is never checked.".to_string() })
        })
        .when_last_contains("swap two elements in a vector", &a)
        .when_last_contains(GENERAL_PROMPT, &reply(&java("variant_b_incorrect.java")))
        .when_last_contains("Please pay attention to ArrayIndexOutOfBoundsException", &reply(&java("variant_c_abuse.java")))
        .when_last_contains("for java.util.Vector.get(int index)", &d)
        .when_last_contains("remove the character at a given index", &reply(&java("string_builder_unguarded.java")))
        .when_last_contains("for java.lang.StringBuilder.deleteCharAt(int index)", &reply(&java("string_builder_guarded.java")))
        .when_last_contains(
            "What Java SDK & JDK methods",
            "The method uses:\n1. java.util.Vector.get(int index)\n2. java.util.Vector.set(int index, E element)",
        )
        .when_last_contains("Can the code handle all exceptions", "Yes.")
}

fn main() {
    let out = fixtures().join("cassettes/walkthrough.jsonl");
    if out.exists() {
        fs::remove_file(&out).expect("remove old cassette");
    }
    let tape = Arc::new(Cassette::open(&out).expect("cassette"));
    let client = LlmClient::new(ClientMode::Record)
        .with_cassette(tape.clone())
        .with_transport(Arc::new(transport()));
    let kb = kb();

    let swap = CodingTask::new("T2", "How to swap two elements in a vector using Java?");
    let strings = CodingTask::new("S1", "How to remove the character at a given index of a string using StringBuilder?");

    for task in [&swap, &strings] {
        let r = run_chain(task, &kb, &client, &ChainConfig::default()).expect("chain");
        println!("{}: loops={} termination={}", task.id, r.loop_count, r.termination.name());
    }
    let llm_checked = ChainConfig { checker: CheckerKind::Llm, ..ChainConfig::default() };
    let r = run_chain(&swap, &kb, &client, &llm_checked).expect("chain");
    println!("T2 (llm checker): loops={} termination={}", r.loop_count, r.termination.name());

    let m = quality_matrix(std::slice::from_ref(&swap), &kb, &client, &PromptMode::ALL);
    println!("matrix errored: {:?}", m.errored);

    let good = llm_eva(&java("variant_d_good.java"), &client).expect("llm_eva");
    println!("llm_eva(D) = {good}");
    println!("{} entries in {}", tape.len(), out.display());
}
