use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_throwguard"))
        .args(args)
        .env_remove("THROWGUARD_LLM_BASE_URL")
        .env_remove("THROWGUARD_LLM_API_KEY")
        .env_remove("THROWGUARD_LLM_MODEL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Env {
    dir: tempfile::TempDir,
    kb: PathBuf,
    cassette: PathBuf,
}

fn setup() -> Env {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    let o = run(&["kb", "build", s(&fixtures().join("pages")), "--out", s(&kb)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    Env { dir, kb, cassette: fixtures().join("cassettes/walkthrough.jsonl") }
}

fn java(name: &str) -> PathBuf {
    fixtures().join("java").join(name)
}

#[test]
fn kb_build_reports_counts_and_writes_vector_entries() {
    let env = setup();
    let text = fs::read_to_string(&env.kb).unwrap();
    assert!(text.contains("java.util.Vector.get(int index)"));
    assert!(text.contains("java.util.Vector.set(int index, E element)"));
    let o = run(&["kb", "lookup", "--kb", s(&env.kb), "java.util.Vector.get(int index)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("throws ArrayIndexOutOfBoundsException - if the index is out of range"));
    assert_eq!(run(&["kb", "lookup", "--kb", s(&env.kb), "NoSuchThing.run"]).status.code(), Some(1));
}

#[test]
fn kb_build_on_an_empty_dir_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let pages = dir.path().join("pages");
    fs::create_dir(&pages).unwrap();
    let out = dir.path().join("kb.json");
    let o = run(&["kb", "build", s(&pages), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert!(stdout(&o).starts_with("0 entries, 0 specs"));
    assert!(out.is_file());
}

#[test]
fn kb_build_on_a_missing_dir_is_an_environment_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kb", "build", s(&dir.path().join("absent")), "--out", s(&dir.path().join("kb.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn kb_build_reports_malformed_pages() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("Bad.txt"), "Package a.b\nClass C\n\nrun\npublic void run()\nThrows:\n- no name\n").unwrap();
    let out = dir.path().join("kb.json");
    let o = run(&["kb", "build", s(dir.path()), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Bad.txt: malformed throws clause"));
    assert!(!out.exists());
}

#[test]
fn check_gates_on_the_label() {
    let env = setup();
    let good = run(&["check", s(&java("variant_d_good.java")), "--kb", s(&env.kb)]);
    assert_eq!(good.status.code(), Some(0));
    assert!(stdout(&good).starts_with("label: GoodPractice"));

    let bad = run(&["check", s(&java("variant_a_incomplete.java")), "--kb", s(&env.kb)]);
    assert_eq!(bad.status.code(), Some(1));
    let out = stdout(&bad);
    assert!(out.starts_with("label: IncompleteExceptionHandling"));
    let unhandled = out.lines().filter(|l| l.contains(" throws ArrayIndexOutOfBoundsException - ")).count();
    assert_eq!(unhandled, 2);

    let broken = run(&["check", s(&java("malformed.java")), "--kb", s(&env.kb)]);
    assert_eq!(broken.status.code(), Some(2));
    assert!(stderr(&broken).contains("3:19"));
}

#[test]
fn check_json_is_machine_readable() {
    let env = setup();
    let o = run(&["check", s(&java("variant_c_abuse.java")), "--kb", s(&env.kb), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["label"], "AbuseOfTryCatch");
    assert_eq!(v["statuses"].as_array().unwrap().len(), 4);
}

fn chain_args<'a>(env: &'a Env, out: &'a Path) -> Vec<&'a str> {
    vec!["chain", "--kb", s(&env.kb), "--cassette", s(&env.cassette), "--out", s(out)]
}

#[test]
fn single_task_replays_the_walkthrough() {
    let env = setup();
    let out = env.dir.path().join("run");
    let mut args = chain_args(&env, &out);
    args.extend(["--task", "How to swap two elements in a vector using Java?", "--id", "T2"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "T2: loops=2 termination=Converged quality=GoodPractice");
    assert!(out.join("transcripts/T2.json").is_file());

    let report = run(&["report", s(&out)]);
    assert_eq!(report.status.code(), Some(0));
    assert!(stdout(&report).contains("histogram: {2:1}"));
}

#[test]
fn corpus_failures_do_not_abort_the_run() {
    let env = setup();
    let out = env.dir.path().join("run");
    let corpus = fixtures().join("corpus/three_tasks.jsonl");
    let mut args = chain_args(&env, &out);
    args.extend(["--corpus", s(&corpus), "--workers", "3"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    let records: Vec<serde_json::Value> = fs::read_to_string(out.join("results.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 3);
    assert_eq!(records.iter().filter(|r| r.get("result").is_some()).count(), 2);
    assert_eq!(records.iter().filter(|r| r.get("error").is_some()).count(), 1);
    assert_eq!(records[2]["id"], "F1");
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn loop_cap_of_one_stops_before_the_rewrite() {
    let env = setup();
    let out = env.dir.path().join("run");
    let mut args = chain_args(&env, &out);
    args.extend(["--task", "How to swap two elements in a vector using Java?", "--max-loops", "1"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("loops=1 termination=LoopCapReached quality=IncompleteExceptionHandling"));
}

#[test]
fn replay_runs_are_byte_identical() {
    let env = setup();
    let corpus = fixtures().join("corpus/three_tasks.jsonl");
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = env.dir.path().join(name);
        let mut args = chain_args(&env, &out);
        args.extend(["--corpus", s(&corpus), "--workers", "2"]);
        let o = run(&args);
        outputs.push((
            o.stdout,
            fs::read(out.join("results.jsonl")).unwrap(),
            fs::read(out.join("transcripts/T2.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn report_needs_records() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["report", s(dir.path())]).status.code(), Some(2));
}

#[test]
fn report_has_one_column_per_mode_present() {
    let env = setup();
    let mut lines = String::new();
    for mode in ["direct", "fine"] {
        let out = env.dir.path().join(mode);
        let mut args = chain_args(&env, &out);
        args.extend(["--task", "How to swap two elements in a vector using Java?", "--mode", mode]);
        run(&args);
        lines.push_str(&fs::read_to_string(out.join("results.jsonl")).unwrap());
    }
    let mixed = env.dir.path().join("mixed");
    fs::create_dir(&mixed).unwrap();
    fs::write(mixed.join("results.jsonl"), lines).unwrap();
    let o = run(&["report", s(&mixed)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let header = out.lines().find(|l| l.starts_with("label")).unwrap();
    assert_eq!(header.split_whitespace().collect::<Vec<_>>(), ["label", "direct", "fine"]);
}

#[test]
fn eval_reproduces_the_mode_pattern() {
    let env = setup();
    let out = env.dir.path().join("eval");
    let o = run(&[
        "eval",
        "--corpus",
        s(&fixtures().join("corpus/walkthrough.jsonl")),
        "--kb",
        s(&env.kb),
        "--cassette",
        s(&env.cassette),
        "--out",
        s(&out),
        "--workers",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row = |label: &str| -> Vec<String> {
        text.lines()
            .find(|l| l.starts_with(label))
            .unwrap()
            .split_whitespace()
            .skip(1)
            .map(str::to_string)
            .collect()
    };
    assert_eq!(row("IncompleteExceptionHandling"), ["1", "0", "0", "0"]);
    assert_eq!(row("IncorrectExceptionHandling"), ["0", "1", "0", "0"]);
    assert_eq!(row("AbuseOfTryCatch"), ["0", "0", "1", "0"]);
    assert_eq!(row("GoodPractice"), ["0", "0", "0", "1"]);
    assert!(out.join("matrix.json").is_file());
}

#[test]
fn eval_sampling_is_seeded() {
    let env = setup();
    let corpus = fixtures().join("corpus/three_tasks.jsonl");
    let go = || {
        run(&[
            "eval", "--corpus", s(&corpus), "--kb", s(&env.kb), "--cassette", s(&env.cassette),
            "--modes", "fine", "--sample", "2", "--seed", "11",
        ])
    };
    let (a, b) = (go(), go());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn live_mode_without_endpoint_is_an_environment_error() {
    let env = setup();
    let o = run(&["chain", "--kb", s(&env.kb), "--client", "live", "--task", "How to sort a list?"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("THROWGUARD_LLM_BASE_URL"));
}

#[test]
fn missing_cassette_is_an_environment_error() {
    let env = setup();
    let o = run(&[
        "chain", "--kb", s(&env.kb), "--cassette", s(&env.dir.path().join("none.jsonl")), "--task", "How to sort?",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["chain", "--kb", "x"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("THROWGUARD_LLM_API_KEY"));
}
