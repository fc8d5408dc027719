use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use throwguard_core::chain::{CheckerKind, ChainResult, CodingTask, Exchange, PromptMode, Termination};
use throwguard_core::eval::{quality_outcome, render_loop_stats, render_matrix, sample_indices};
use throwguard_core::java::{analyze, QualityLabel};
use throwguard_core::kb::{kb_load, kb_save, parse_api_page, KnowledgeBase, KnowledgeBaseBuilder, PageError};
use throwguard_core::llm::{Cassette, ClientMode, FailingTransport, HttpConfig, HttpTransport, LlmClient, Transport};
use throwguard_core::{loop_stats, run_chain, ChainConfig, ChainError, QualityMatrix};

use crate::output::{file_stem, line_col, write_atomic};
use crate::{ChainArgs, CheckerArg, ClientArg, ClientOpts, EvalArgs, ModeArg};

const PAGE_EXTENSIONS: [&str; 3] = ["html", "htm", "txt"];

impl From<ModeArg> for PromptMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Direct => PromptMode::Direct,
            ModeArg::General => PromptMode::General,
            ModeArg::Coarse => PromptMode::Coarse,
            ModeArg::Fine => PromptMode::Fine,
        }
    }
}

pub fn kb_build(pages_dir: &Path, out: &Path, verbose: bool) -> Result<ExitCode> {
    let listing = fs::read_dir(pages_dir).with_context(|| format!("cannot read {}", pages_dir.display()))?;
    let mut pages: Vec<PathBuf> = Vec::new();
    for entry in listing {
        let path = entry.with_context(|| format!("cannot list {}", pages_dir.display()))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if ext.is_some_and(|e| PAGE_EXTENSIONS.contains(&e.as_str())) {
            pages.push(path);
        }
    }
    pages.sort();

    let mut builder = KnowledgeBaseBuilder::new();
    let mut failures = 0;
    for path in &pages {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        match parse_api_page(&text) {
            Ok(entries) => {
                if verbose {
                    eprintln!("{name}: {} entries", entries.len());
                }
                builder.add_page(&name, entries);
            }
            Err(PageError::NoDeclaration) => eprintln!("warning: {name}: no method declarations, skipped"),
            Err(e) => {
                failures += 1;
                eprintln!("{name}: {e}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} page(s) could not be parsed; no knowledge base written");
        return Ok(ExitCode::from(1));
    }
    if pages.is_empty() {
        eprintln!("warning: no pages found in {}; writing an empty knowledge base", pages_dir.display());
    }
    let kb = builder.build();
    kb_save(&kb, out).with_context(|| format!("cannot write {}", out.display()))?;

    let mut per_source: BTreeMap<&str, usize> = BTreeMap::new();
    for prov in kb.provenance().values() {
        for s in &prov.sources {
            *per_source.entry(s).or_default() += 1;
        }
    }
    println!("{} entries, {} specs from {} pages -> {}", kb.len(), kb.spec_count(), pages.len(), out.display());
    for (source, n) in per_source {
        println!("  {source}: {n}");
    }
    Ok(ExitCode::SUCCESS)
}

fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    kb_load(path).with_context(|| format!("cannot load knowledge base {}", path.display()))
}

pub fn kb_lookup(query: &str, kb_path: &Path) -> Result<ExitCode> {
    let kb = load_kb(kb_path)?;
    let matches: Vec<_> = match kb.entry(query) {
        Some(e) => vec![e],
        None => kb.entries().iter().filter(|e| e.fqn.contains(query)).collect(),
    };
    if matches.is_empty() {
        println!("no entry matches {query}");
        return Ok(ExitCode::from(1));
    }
    for e in matches {
        println!("{}", e.fqn);
        for s in &e.specs {
            let guard = if s.guardable { "guardable" } else { "not guardable" };
            println!("  throws {} - {} [{guard}]", s.exception, s.condition);
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn check(code_path: &Path, kb_path: &Path, json: bool) -> Result<ExitCode> {
    let kb = load_kb(kb_path)?;
    let src = fs::read_to_string(code_path).with_context(|| format!("cannot read {}", code_path.display()))?;
    let report = match analyze(&src, &kb) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: {e}", code_path.display());
            return Ok(ExitCode::from(2));
        }
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        match report.label {
            Some(label) => println!("label: {label}"),
            None => println!("label: none (no documented APIs found)"),
        }
        if !report.unhandled.is_empty() {
            println!("unhandled:");
            for u in &report.unhandled {
                println!("  {} throws {} - {}", u.fqn, u.exception, u.condition);
            }
        }
        if !report.statuses.is_empty() {
            println!("statuses:");
            for s in &report.statuses {
                let (line, col) = line_col(&src, s.span.start);
                println!("  {line}:{col} {} {} {:?}", s.fqn, s.exception, s.status);
            }
        }
        for a in &report.ambiguous {
            println!("ambiguous: {}/{} could be {}", a.name, a.arity, a.candidates.join(" | "));
        }
        for w in &report.warnings {
            println!("warning: {w}");
        }
    }
    if report.label.is_none() {
        eprintln!("warning: no call matched the knowledge base");
    }
    Ok(match report.label {
        Some(QualityLabel::GoodPractice) | None => ExitCode::SUCCESS,
        Some(_) => ExitCode::from(1),
    })
}

fn build_client(opts: &ClientOpts) -> Result<LlmClient> {
    let needs_tape = opts.client != ClientArg::Live;
    let tape = match (&opts.cassette, needs_tape) {
        (Some(path), true) => {
            if opts.client == ClientArg::Replay && !path.is_file() {
                bail!("cassette {} does not exist", path.display());
            }
            Some(Arc::new(Cassette::open(path).with_context(|| format!("cannot open cassette {}", path.display()))?))
        }
        (None, true) => bail!("--cassette is required with --client {:?}", opts.client),
        (_, false) => None,
    };
    let endpoint = opts.client != ClientArg::Replay || opts.fall_through;
    let transport: Arc<dyn Transport> = if endpoint {
        Arc::new(HttpTransport::new(HttpConfig::from_env()?))
    } else {
        Arc::new(FailingTransport)
    };
    let mode = match opts.client {
        ClientArg::Replay if opts.fall_through => ClientMode::Replay,
        ClientArg::Replay => ClientMode::ReplayStrict,
        ClientArg::Record => ClientMode::Record,
        ClientArg::Live => ClientMode::Live,
    };
    let mut client = LlmClient::new(mode).with_transport(transport).fall_through_on_miss(opts.fall_through);
    if let Some(tape) = tape {
        client = client.with_cassette(tape);
    }
    Ok(client)
}

fn read_corpus(path: &Path) -> Result<Vec<CodingTask>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read corpus {}", path.display()))?;
    let mut tasks = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let task: CodingTask =
            serde_json::from_str(line).with_context(|| format!("{}:{}: not a task record", path.display(), n + 1))?;
        tasks.push(task);
    }
    Ok(tasks)
}

fn prepare_out(out: &Option<PathBuf>) -> Result<Option<PathBuf>> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(out.clone())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// One line of `results.jsonl`. The transcript lives in its own file.
#[derive(Debug, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub mode: PromptMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ChainResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize)]
struct TranscriptFile<'a> {
    id: &'a str,
    mode: PromptMode,
    exchanges: &'a [Exchange],
}

fn summary_line(r: &TaskRecord) -> String {
    match (&r.result, &r.error) {
        (Some(res), None) => format!(
            "{}: loops={} termination={} quality={}",
            r.id,
            res.loop_count,
            res.termination.name(),
            res.quality.map_or("none", QualityLabel::as_str)
        ),
        (_, Some(e)) => format!("{}: error: {e}", r.id),
        (None, None) => format!("{}: no result", r.id),
    }
}

pub fn chain(args: &ChainArgs, verbose: bool) -> Result<ExitCode> {
    let kb = load_kb(&args.client.kb)?;
    let tasks = match (&args.task, &args.corpus) {
        (Some(text), _) => vec![CodingTask::new(args.id.clone(), text.clone())],
        (None, Some(path)) => read_corpus(path)?,
        (None, None) => bail!("either --task or --corpus is required"),
    };
    let client = build_client(&args.client)?;
    let out = prepare_out(&args.client.out)?;
    let mode = PromptMode::from(args.mode);
    let config = ChainConfig {
        mode,
        max_loops: args.max_loops,
        checker: match args.checker {
            CheckerArg::Static => CheckerKind::Deterministic,
            CheckerArg::Llm => CheckerKind::Llm,
        },
        oscillation_detection: args.oscillation,
        model: args.client.model.clone(),
        temperature: args.client.temperature,
        ..ChainConfig::default()
    };
    if config.max_loops == 0 {
        bail!("--max-loops must be at least 1");
    }

    let runs: Vec<(TaskRecord, Vec<Exchange>)> = pool(args.client.workers)?.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                if verbose {
                    eprintln!("running {}", task.id);
                }
                let mut record = TaskRecord { id: task.id.clone(), mode, result: None, error: None };
                let transcript = match run_chain(task, &kb, &client, &config) {
                    Ok(mut r) => {
                        let transcript = std::mem::take(&mut r.transcript);
                        if let Termination::LlmError { loop_index, message } = &r.termination {
                            record.error = Some(format!("model call failed in loop {loop_index}: {message}"));
                        } else {
                            record.result = Some(r);
                        }
                        transcript
                    }
                    Err(ChainError::Parse { loop_index, error, transcript, .. }) => {
                        record.error = Some(format!("generated code of loop {loop_index} does not parse: {error}"));
                        transcript
                    }
                    Err(e) => {
                        record.error = Some(e.to_string());
                        Vec::new()
                    }
                };
                (record, transcript)
            })
            .collect()
    });

    if let Some(dir) = &out {
        let transcripts = dir.join("transcripts");
        fs::create_dir_all(&transcripts).with_context(|| format!("cannot create {}", transcripts.display()))?;
        let mut lines = String::new();
        for (record, exchanges) in &runs {
            lines.push_str(&serde_json::to_string(record)?);
            lines.push('\n');
            let file = TranscriptFile { id: &record.id, mode, exchanges };
            let mut body = serde_json::to_string_pretty(&file)?;
            body.push('\n');
            write_atomic(&transcripts.join(format!("{}.json", file_stem(&record.id))), body.as_bytes())?;
        }
        write_atomic(&dir.join("results.jsonl"), lines.as_bytes())?;
    }

    let mut failed = 0;
    for (record, _) in &runs {
        println!("{}", summary_line(record));
        failed += usize::from(record.error.is_some());
    }
    if failed > 0 {
        eprintln!("{failed} of {} task(s) failed", runs.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn read_records(dir: &Path) -> Result<Vec<TaskRecord>> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let path = dir.join("results.jsonl");
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(e).with_context(|| format!("cannot read {}", path.display())),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).with_context(|| format!("{}:{}: bad record", path.display(), n + 1)))
        .collect()
}

#[derive(Serialize)]
struct ReportJson {
    loop_stats: Option<throwguard_core::LoopStats>,
    histogram: Vec<(usize, usize)>,
    quality: QualityMatrix,
}

pub fn report(dir: &Path, json: bool) -> Result<ExitCode> {
    let records = read_records(dir)?;
    if records.is_empty() {
        bail!("no result records in {}", dir.display());
    }
    let results: Vec<ChainResult> = records.iter().filter_map(|r| r.result.clone()).collect();
    let stats = if results.is_empty() { None } else { Some(loop_stats(&results)?) };

    let mut matrix = QualityMatrix::new(&[]);
    for r in &records {
        let outcome = match (&r.result, &r.error) {
            (Some(res), _) => res.quality.ok_or_else(|| "no documented APIs".to_string()),
            (None, Some(e)) => Err(e.clone()),
            (None, None) => Err("no result".to_string()),
        };
        matrix.record(&r.id, r.mode, outcome);
    }

    if json {
        let histogram = stats.as_ref().map(|s| s.histogram_pairs()).unwrap_or_default();
        let body = ReportJson { loop_stats: stats, histogram, quality: matrix };
        println!("{}", serde_json::to_string_pretty(&body)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("records: {} ({} with results, {} failed)", records.len(), results.len(), records.len() - results.len());
    match &stats {
        Some(s) => {
            let pairs: Vec<String> = s.histogram_pairs().iter().map(|(k, n)| format!("{k}:{n}")).collect();
            println!("histogram: {{{}}}", pairs.join(", "));
            print!("{}", render_loop_stats(s));
        }
        None => println!("histogram: {{}}"),
    }
    println!();
    print!("{}", render_matrix(&matrix));
    Ok(ExitCode::SUCCESS)
}

pub fn eval(args: &EvalArgs, verbose: bool) -> Result<ExitCode> {
    let kb = load_kb(&args.client.kb)?;
    let mut tasks = read_corpus(&args.corpus)?;
    let client = build_client(&args.client)?;
    let out = prepare_out(&args.client.out)?;
    if let Some(n) = args.sample {
        let keep = sample_indices(tasks.len(), n, args.seed);
        tasks = keep.into_iter().map(|i| tasks[i].clone()).collect();
        if verbose {
            eprintln!("sampled {} task(s) with seed {}", tasks.len(), args.seed);
        }
    }
    let modes: Vec<PromptMode> = if args.modes.is_empty() {
        PromptMode::ALL.to_vec()
    } else {
        args.modes.iter().map(|m| PromptMode::from(*m)).collect()
    };
    let jobs: Vec<(&CodingTask, PromptMode)> =
        modes.iter().flat_map(|&m| tasks.iter().map(move |t| (t, m))).collect();
    let outcomes: Vec<Result<QualityLabel, String>> = pool(args.client.workers)?.install(|| {
        jobs.par_iter()
            .map(|(task, mode)| quality_outcome(task, *mode, &kb, &client).map_err(|e| e.to_string()))
            .collect()
    });
    let mut matrix = QualityMatrix::new(&modes);
    for ((task, mode), outcome) in jobs.iter().zip(outcomes) {
        matrix.record(&task.id, *mode, outcome);
    }
    print!("{}", render_matrix(&matrix));
    for f in &matrix.failures {
        eprintln!("{} [{}]: {}", f.id, f.mode, f.message);
    }
    if let Some(dir) = out {
        let mut body = serde_json::to_string_pretty(&matrix)?;
        body.push('\n');
        write_atomic(&dir.join("matrix.json"), body.as_bytes())?;
    }
    Ok(if matrix.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
