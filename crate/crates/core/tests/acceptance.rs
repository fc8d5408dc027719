//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{corpus, fixtures, java, swap_task, walkthrough_cassette};
use serde::Deserialize;
use throwguard_core::chain::{
    build_check_prompts, build_exception_prompt, ChainResult, CodingTask, PromptMode, Termination, GENERAL_PROMPT,
    LISTING_PROMPT,
};
use throwguard_core::java::{classify_quality, collect_unhandled, QualityLabel, UnhandledException};
use throwguard_core::kb::{from_json, parse_api_page, to_json, ExceptionHierarchy, KnowledgeBase, KnowledgeBaseBuilder};
use throwguard_core::llm::{ChatRequest, ClientMode, LlmClient, LlmError, ScriptedTransport, Transport};
use throwguard_core::{loop_stats, quality_matrix, run_chain, ChainConfig};

type Outcome = Result<(), String>;
type Criterion = dyn Fn(&Ctx) -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Fails every call and counts how many were attempted.
#[derive(Default)]
struct NetworkTrap {
    calls: AtomicUsize,
}

impl Transport for NetworkTrap {
    fn send(&self, _request: &ChatRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(LlmError::TransportError { retries: 0, message: "network access is disabled".into() })
    }
}

struct Ctx {
    trap: Arc<NetworkTrap>,
    kb: KnowledgeBase,
}

impl Ctx {
    fn replay(&self) -> LlmClient {
        LlmClient::new(ClientMode::ReplayStrict)
            .with_cassette(walkthrough_cassette())
            .with_transport(self.trap.clone())
    }
}

#[derive(Deserialize, PartialEq, Debug)]
struct Triple {
    api: String,
    exception: String,
    condition: String,
}

fn page_paths() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(fixtures().join("pages"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("html" | "txt")))
        .collect();
    v.sort();
    v
}

fn kb_extraction(_: &Ctx) -> Outcome {
    let pages: Vec<(PathBuf, String, Vec<Triple>)> = page_paths()
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            let stem = p.file_stem().unwrap().to_str().unwrap().to_string();
            let side = fs::read_to_string(p.with_file_name(format!("{stem}.expected.json"))).unwrap();
            (p, text, serde_json::from_str(&side).unwrap())
        })
        .collect();
    ensure!(pages.len() >= 10, "only {} fixture pages", pages.len());

    let start = Instant::now();
    let mut builder = KnowledgeBaseBuilder::new();
    let mut diffs = 0;
    for (path, text, expected) in &pages {
        let entries = parse_api_page(text).map_err(|e| format!("{}: {e}", path.display()))?;
        let got: Vec<Triple> = entries
            .iter()
            .flat_map(|e| {
                e.specs.iter().map(|s| Triple {
                    api: e.fqn.clone(),
                    exception: s.exception.clone(),
                    condition: s.condition.clone(),
                })
            })
            .collect();
        if &got != expected {
            diffs += 1;
        }
        builder.add_page(path.file_name().unwrap().to_str().unwrap(), entries);
    }
    let kb = builder.build();
    let reloaded = from_json(&to_json(&kb)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    ensure!(diffs == 0, "{diffs} pages differ from their sidecars");
    ensure!(reloaded == kb, "save/load round trip changed the knowledge base");
    ensure!(!kb.lookup("java.util.Vector.get(int index)").is_empty(), "Vector.get missing");
    ensure!(!kb.lookup("java.util.Vector.set(int index, E element)").is_empty(), "Vector.set missing");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(())
}

fn walkthrough_classification(ctx: &Ctx) -> Outcome {
    let expect = [
        ("variant_a_incomplete.java", QualityLabel::IncompleteExceptionHandling),
        ("variant_b_incorrect.java", QualityLabel::IncorrectExceptionHandling),
        ("variant_c_abuse.java", QualityLabel::AbuseOfTryCatch),
        ("variant_d_good.java", QualityLabel::GoodPractice),
        ("priority_mix.java", QualityLabel::IncompleteExceptionHandling),
    ];
    for (file, label) in expect {
        let got = classify_quality(&java(file), &ctx.kb).map_err(|e| format!("{file}: {e}"))?;
        ensure!(got == label, "{file}: got {got}, expected {label}");
    }
    Ok(())
}

fn hierarchy(_: &Ctx) -> Outcome {
    let h = ExceptionHierarchy::shipped();
    ensure!(
        h.is_subtype("ArrayIndexOutOfBoundsException", "IndexOutOfBoundsException"),
        "ArrayIndexOutOfBoundsException is not below IndexOutOfBoundsException"
    );
    for t in h.types() {
        ensure!(h.is_subtype(t, t), "{t} is not a subtype of itself");
        let chain = h.ancestors(t);
        let mut uniq = chain.clone();
        uniq.sort();
        uniq.dedup();
        ensure!(uniq.len() == chain.len(), "cycle through {t}");
        for a in &chain {
            ensure!(!h.is_strict_subtype(a, t), "{a} and {t} are mutually below each other");
        }
    }
    Ok(())
}

fn prompt_fidelity(ctx: &Ctx) -> Outcome {
    let cond = "if the index is out of range (index < 0 || index >= size())";
    let item = |fqn: &str| UnhandledException {
        fqn: fqn.into(),
        exception: "ArrayIndexOutOfBoundsException".into(),
        condition: cond.into(),
    };
    let items = [item("java.util.Vector.get(int index)"), item("java.util.Vector.set(int index, E element)")];
    let fine = build_exception_prompt(PromptMode::Fine, &items).map_err(|e| e.to_string())?;
    let expected_fine = "Please check if the index is out of range (index < 0 || index >= size()) for \
        java.util.Vector.get(int index), otherwise throw ArrayIndexOutOfBoundsException. Please check if the index \
        is out of range (index < 0 || index >= size()) for java.util.Vector.set(int index, E element), otherwise \
        throw ArrayIndexOutOfBoundsException";
    ensure!(fine == expected_fine, "fine prompt differs:\n{fine}");

    let general = build_exception_prompt(PromptMode::General, &items).map_err(|e| e.to_string())?;
    ensure!(general == "Please pay attention to potential exceptions.", "general prompt: {general}");
    ensure!(general == GENERAL_PROMPT, "general constant drifted");
    let coarse = build_exception_prompt(PromptMode::Coarse, &items).map_err(|e| e.to_string())?;
    ensure!(coarse == "Please pay attention to ArrayIndexOutOfBoundsException.", "coarse prompt: {coarse}");

    let apis = ["java.util.Vector.get(int index)".to_string(), "java.util.Vector.set(int index, E element)".to_string()];
    let (listing, questions) = build_check_prompts(&apis, &ctx.kb);
    ensure!(
        listing == "What Java SDK & JDK methods are used in the method you provided? Please list the fully qualified names of the methods.",
        "listing prompt: {listing}"
    );
    ensure!(listing == LISTING_PROMPT, "listing constant drifted");
    ensure!(
        questions
            == [
                "Is the ArrayIndexOutOfBoundsException handled for java.util.Vector.get(int index) in the code snippets? (Y/N)",
                "Is the ArrayIndexOutOfBoundsException handled for java.util.Vector.set(int index, E element) in the code snippets? (Y/N)",
            ],
        "check questions: {questions:?}"
    );
    Ok(())
}

fn chain_convergence(ctx: &Ctx) -> Outcome {
    let run = || run_chain(&swap_task(), &ctx.kb, &ctx.replay(), &ChainConfig::default()).map_err(|e| e.to_string());
    let r = run()?;
    ensure!(r.loop_count == 2, "loop_count = {}", r.loop_count);
    ensure!(r.unhandled_per_loop == [2, 0], "unhandled_per_loop = {:?}", r.unhandled_per_loop);
    ensure!(r.termination == Termination::Converged, "termination = {:?}", r.termination);
    let post = collect_unhandled(&r.final_code, &ctx.kb).map_err(|e| e.to_string())?;
    ensure!(post.is_empty(), "post-hoc check found {post:?}");
    let first = serde_json::to_vec(&r).map_err(|e| e.to_string())?;
    let second = serde_json::to_vec(&run()?).map_err(|e| e.to_string())?;
    ensure!(first == second, "two runs produced different records");
    Ok(())
}

const STUCK: &str = "```java\nclass A { void f(java.util.Vector<Integer> v) { v.get(0); } }\n```";
const FLIP: &str = "```java\nclass A { void f(java.util.Vector<Integer> v) { v.set(0, 1); } }\n```";

fn loop_control(ctx: &Ctx) -> Outcome {
    let task = CodingTask::new("mock", "How to read the first element of a vector?");
    let stuck = LlmClient::new(ClientMode::Live)
        .with_transport(Arc::new(ScriptedTransport::new().rule(|_| Some(STUCK.to_string()))));
    for cap in [1, 3, 5] {
        let config = ChainConfig { max_loops: cap, ..ChainConfig::default() };
        let r = run_chain(&task, &ctx.kb, &stuck, &config).map_err(|e| e.to_string())?;
        ensure!(r.termination == Termination::LoopCapReached, "cap {cap}: {:?}", r.termination);
        ensure!(r.loop_count == cap, "cap {cap}: ran {} loops", r.loop_count);
    }

    let flipping = LlmClient::new(ClientMode::Live).with_transport(Arc::new(ScriptedTransport::new().rule(
        |req: &ChatRequest| {
            let rewrites = req.messages.iter().filter(|m| m.content.starts_with("Please check")).count();
            Some(if rewrites % 2 == 0 { STUCK } else { FLIP }.to_string())
        },
    )));
    let config = ChainConfig { max_loops: 10, ..ChainConfig::default() };
    let r = run_chain(&task, &ctx.kb, &flipping, &config).map_err(|e| e.to_string())?;
    ensure!(r.termination == Termination::Oscillation, "alternating mock ended with {:?}", r.termination);
    ensure!(r.loop_count < config.max_loops, "oscillation only after {} loops", r.loop_count);
    Ok(())
}

fn synthetic(per_loop: &[usize]) -> ChainResult {
    ChainResult {
        final_code: String::new(),
        loop_count: per_loop.len(),
        unhandled_per_loop: per_loop.to_vec(),
        termination: Termination::Converged,
        transcript: Vec::new(),
        quality: None,
    }
}

fn evaluation(ctx: &Ctx) -> Outcome {
    let s = loop_stats(&[synthetic(&[2, 0]), synthetic(&[2, 0]), synthetic(&[3, 1, 0])]).map_err(|e| e.to_string())?;
    ensure!(s.histogram == BTreeMap::from([(2, 2), (3, 1)]), "histogram {:?}", s.histogram);
    // (2+0+2+0)/4 and (3+1+0)/3
    let close = |k: usize, v: f64| s.avg_unhandled_by_loop.get(&k).is_some_and(|a| (a - v).abs() < 1e-12);
    ensure!(close(2, 1.0) && close(3, 4.0 / 3.0), "averages {:?}", s.avg_unhandled_by_loop);

    let m = quality_matrix(&corpus("walkthrough.jsonl"), &ctx.kb, &ctx.replay(), &PromptMode::ALL);
    let expect = [
        (PromptMode::Direct, QualityLabel::IncompleteExceptionHandling),
        (PromptMode::General, QualityLabel::IncorrectExceptionHandling),
        (PromptMode::Coarse, QualityLabel::AbuseOfTryCatch),
        (PromptMode::Fine, QualityLabel::GoodPractice),
    ];
    ensure!(m.failures.is_empty(), "matrix failures {:?}", m.failures);
    for (mode, label) in expect {
        ensure!(
            m.count(mode, label) == 1 && m.classified(mode) == 1,
            "{mode}: expected {label}, row {:?}",
            m.counts.get(&mode)
        );
    }
    Ok(())
}

fn replay_purity(ctx: &Ctx, started: Instant) -> Outcome {
    // A task without any recorded answer must surface a miss, not a network call.
    let tasks = corpus("three_tasks.jsonl");
    let r = run_chain(&tasks[2], &ctx.kb, &ctx.replay(), &ChainConfig::default()).map_err(|e| e.to_string())?;
    ensure!(
        matches!(r.termination, Termination::LlmError { .. }),
        "unrecorded task ended with {:?}",
        r.termination
    );
    let calls = ctx.trap.calls.load(Ordering::SeqCst);
    ensure!(calls == 0, "{calls} requests reached the transport");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "acceptance run took {elapsed:?}");
    Ok(())
}

fn main() {
    let started = Instant::now();
    let ctx = Ctx { trap: Arc::new(NetworkTrap::default()), kb: common::fixture_kb() };
    let criteria: [(&str, &Criterion); 7] = [
        ("knowledge base extraction", &kb_extraction),
        ("walkthrough classification", &walkthrough_classification),
        ("exception hierarchy", &hierarchy),
        ("prompt fidelity", &prompt_fidelity),
        ("chain convergence", &chain_convergence),
        ("loop control", &loop_control),
        ("evaluation", &evaluation),
    ];
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(()) => println!("PASS  {n}. {name}"),
        Err(why) => {
            failed += 1;
            println!("FAIL  {n}. {name}: {why}");
        }
    };
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&ctx)))
            .unwrap_or_else(|_| Err("panicked".into()));
        report(i + 1, name, outcome);
    }
    report(8, "replay purity", replay_purity(&ctx, started));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed in {:.2?}", started.elapsed());
}
