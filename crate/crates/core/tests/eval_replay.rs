mod common;

use std::collections::BTreeMap;

use common::{corpus, fixture_kb, java, replay_client, swap_task};
use throwguard_core::chain::{ChainResult, Termination};
use throwguard_core::eval::{llm_eva_prompt, render_loop_stats, render_matrix, sample_size};
use throwguard_core::java::QualityLabel;
use throwguard_core::llm::{ClientMode, LlmClient, ScriptedTransport};
use throwguard_core::{llm_eva, loop_stats, quality_matrix, run_chain, ChainConfig, EvalError, PromptMode};

fn converged(per_loop: &[usize]) -> ChainResult {
    ChainResult {
        final_code: String::new(),
        loop_count: per_loop.len(),
        unhandled_per_loop: per_loop.to_vec(),
        termination: Termination::Converged,
        transcript: Vec::new(),
        quality: Some(QualityLabel::GoodPractice),
    }
}

#[test]
fn synthetic_loop_stats() {
    let s = loop_stats(&[converged(&[2, 0]), converged(&[2, 0]), converged(&[3, 1, 0])]).unwrap();
    assert_eq!(s.histogram, BTreeMap::from([(2, 2), (3, 1)]));
    assert!((s.avg_unhandled_by_loop[&2] - 1.0).abs() < 1e-12);
    assert!((s.avg_unhandled_by_loop[&3] - 4.0 / 3.0).abs() < 1e-12);
    assert!((s.within_k(2) - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(s.within_k(3), 1.0);
    let text = render_loop_stats(&s);
    assert!(text.starts_with("tasks: 3  converged: 3"));
}

#[test]
fn stats_are_recomputable_from_persisted_records() {
    let kb = fixture_kb();
    let r = run_chain(&swap_task(), &kb, &replay_client(), &ChainConfig::default()).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: ChainResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    assert_eq!(loop_stats(&[back]).unwrap(), loop_stats(&[r]).unwrap());
}

#[test]
fn four_variant_matrix_pattern() {
    let kb = fixture_kb();
    let m = quality_matrix(&corpus("walkthrough.jsonl"), &kb, &replay_client(), &PromptMode::ALL);
    let expect = [
        (PromptMode::Direct, QualityLabel::IncompleteExceptionHandling),
        (PromptMode::General, QualityLabel::IncorrectExceptionHandling),
        (PromptMode::Coarse, QualityLabel::AbuseOfTryCatch),
        (PromptMode::Fine, QualityLabel::GoodPractice),
    ];
    for (mode, label) in expect {
        assert_eq!(m.count(mode, label), 1, "{mode}");
        assert_eq!(m.classified(mode), 1, "{mode}");
        assert_eq!(m.errored[&mode], 0);
    }
    let table = render_matrix(&m);
    assert!(table.lines().next().unwrap().contains("direct"));
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn matrix_rows_sum_to_corpus_minus_errors() {
    let kb = fixture_kb();
    let tasks = corpus("three_tasks.jsonl");
    let m = quality_matrix(&tasks, &kb, &replay_client(), &PromptMode::ALL);
    for mode in PromptMode::ALL {
        assert_eq!(m.classified(mode) + m.errored[&mode], tasks.len(), "{mode}");
    }
    // The third task has no cassette entries at all.
    assert!(m.failures.iter().any(|f| f.id == "F1"));
}

#[test]
fn empty_mode_list_gives_an_empty_matrix() {
    let m = quality_matrix(&corpus("walkthrough.jsonl"), &fixture_kb(), &replay_client(), &[]);
    assert!(m.is_empty());
}

#[test]
fn llm_eva_from_cassette() {
    assert!(llm_eva(&java("variant_d_good.java"), &replay_client()).unwrap());
}

fn answering(text: &'static str) -> LlmClient {
    LlmClient::new(ClientMode::Live)
        .with_transport(std::sync::Arc::new(ScriptedTransport::new().rule(move |_| Some(text.to_string()))))
}

#[test]
fn llm_eva_verdicts() {
    assert!(llm_eva("class A {}", &answering("Y")).unwrap());
    assert!(!llm_eva("class A {}", &answering("No, the IndexOutOfBoundsException...")).unwrap());
    assert!(matches!(
        llm_eva("class A {}", &answering("It depends.")),
        Err(EvalError::UnparseableVerdict(_))
    ));
}

#[test]
fn llm_eva_prompt_carries_the_question_and_code() {
    let p = llm_eva_prompt("int x;");
    assert!(p.starts_with("Can the code handle all exceptions in good practice? (Y/N)?"));
    assert!(p.ends_with("```java\nint x;\n```"));
}

#[test]
fn sample_size_matches_the_usual_margin() {
    assert_eq!(sample_size(0.05, 1.96), 384);
}
