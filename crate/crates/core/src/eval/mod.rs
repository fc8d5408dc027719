//! Loop statistics, quality matrices, the Y/N good-practice probe, and sampling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    build_exception_prompt, extract_code, parse_verdict, rephrase_task, ChainResult, CodingTask, PromptMode,
    Termination, Verdict, LLM_EVA_PROMPT,
};
use crate::java::{classify_quality, collect_unhandled, AnalysisError, QualityLabel};
use crate::kb::KnowledgeBase;
use crate::llm::{ChatClient, ChatRequest, LlmError, Message};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no results to summarize")]
    EmptyResults,
    #[error("verdict is neither yes nor no: {0:?}")]
    UnparseableVerdict(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopStats {
    /// Loop count to number of converged tasks.
    pub histogram: BTreeMap<usize, usize>,
    /// Every result, converged or not.
    pub total: usize,
    /// Per loop-count group of converged tasks, mean unhandled exceptions per loop.
    pub avg_unhandled_by_loop: BTreeMap<usize, f64>,
}

impl LoopStats {
    pub fn completed(&self) -> usize {
        self.histogram.values().sum()
    }

    /// Share of all tasks that converged within `k` loops.
    pub fn within_k(&self, k: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let hit: usize = self.histogram.range(..=k).map(|(_, n)| n).sum();
        hit as f64 / self.total as f64
    }

    /// `(loop_count, count)` pairs for plotting.
    pub fn histogram_pairs(&self) -> Vec<(usize, usize)> {
        self.histogram.iter().map(|(k, v)| (*k, *v)).collect()
    }
}

pub fn loop_stats(results: &[ChainResult]) -> Result<LoopStats, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let mut histogram = BTreeMap::new();
    let mut sums: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in results.iter().filter(|r| r.termination == Termination::Converged) {
        *histogram.entry(r.loop_count).or_insert(0) += 1;
        let e = sums.entry(r.loop_count).or_insert((0, 0));
        e.0 += r.unhandled_per_loop.iter().sum::<usize>();
        e.1 += r.unhandled_per_loop.len();
    }
    let avg_unhandled_by_loop = sums
        .into_iter()
        .map(|(k, (sum, loops))| (k, if loops == 0 { 0.0 } else { sum as f64 / loops as f64 }))
        .collect();
    Ok(LoopStats { histogram, total: results.len(), avg_unhandled_by_loop })
}

pub fn render_loop_stats(stats: &LoopStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tasks: {}  converged: {}", stats.total, stats.completed());
    let _ = writeln!(out, "{:>6} {:>6} {:>10} {:>12}", "loops", "tasks", "within_k", "avg_unhandled");
    for (k, n) in &stats.histogram {
        let avg = stats.avg_unhandled_by_loop.get(k).copied().unwrap_or(0.0);
        let _ = writeln!(out, "{k:>6} {n:>6} {:>10.4} {avg:>12.3}", stats.within_k(*k));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub id: String,
    pub mode: PromptMode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityMatrix {
    pub modes: Vec<PromptMode>,
    pub counts: BTreeMap<PromptMode, BTreeMap<QualityLabel, usize>>,
    pub errored: BTreeMap<PromptMode, usize>,
    pub failures: Vec<TaskFailure>,
}

impl QualityMatrix {
    pub fn new(modes: &[PromptMode]) -> Self {
        let mut m = Self { modes: modes.to_vec(), ..Self::default() };
        for &mode in modes {
            m.counts.insert(mode, QualityLabel::ALL.iter().map(|l| (*l, 0)).collect());
            m.errored.insert(mode, 0);
        }
        m
    }

    pub fn record(&mut self, id: &str, mode: PromptMode, outcome: Result<QualityLabel, String>) {
        if !self.modes.contains(&mode) {
            self.modes.push(mode);
            self.modes.sort();
            self.counts.insert(mode, QualityLabel::ALL.iter().map(|l| (*l, 0)).collect());
            self.errored.insert(mode, 0);
        }
        match outcome {
            Ok(label) => *self.counts.get_mut(&mode).expect("mode row").entry(label).or_insert(0) += 1,
            Err(message) => {
                *self.errored.get_mut(&mode).expect("mode row") += 1;
                self.failures.push(TaskFailure { id: id.to_string(), mode, message });
            }
        }
    }

    pub fn count(&self, mode: PromptMode, label: QualityLabel) -> usize {
        self.counts.get(&mode).and_then(|r| r.get(&label)).copied().unwrap_or(0)
    }

    /// Classified tasks for a mode, errors excluded.
    pub fn classified(&self, mode: PromptMode) -> usize {
        self.counts.get(&mode).map(|r| r.values().sum()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Labels as rows, modes as columns, errors on the last row.
pub fn render_matrix(m: &QualityMatrix) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<30}", "label");
    for mode in &m.modes {
        let _ = write!(out, " {:>8}", mode.as_str());
    }
    out.push('\n');
    for label in QualityLabel::ALL {
        let _ = write!(out, "{:<30}", label.as_str());
        for &mode in &m.modes {
            let _ = write!(out, " {:>8}", m.count(mode, label));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<30}", "Errored");
    for mode in &m.modes {
        let _ = write!(out, " {:>8}", m.errored.get(mode).copied().unwrap_or(0));
    }
    out.push('\n');
    out
}

/// One task under one mode: generation, then at most one exception-prompt round.
pub fn quality_outcome(
    task: &CodingTask,
    mode: PromptMode,
    kb: &KnowledgeBase,
    client: &dyn ChatClient,
) -> Result<QualityLabel, EvalError> {
    let first = rephrase_task(task);
    let mut history = vec![Message::user(first)];
    let response = client.complete(&ChatRequest::new(history.clone()))?;
    let (code, _) = extract_code(&response);
    history.push(Message::assistant(response));
    let follow_up = match mode {
        PromptMode::Direct => None,
        PromptMode::General => Some(build_exception_prompt(mode, &[]).expect("general prompt")),
        PromptMode::Coarse | PromptMode::Fine => {
            let items = collect_unhandled(&code, kb).map_err(AnalysisError::from)?;
            if items.is_empty() {
                None
            } else {
                Some(build_exception_prompt(mode, &items).expect("non-empty items"))
            }
        }
    };
    let code = match follow_up {
        None => code,
        Some(prompt) => {
            history.push(Message::user(prompt));
            extract_code(&client.complete(&ChatRequest::new(history))?).0
        }
    };
    Ok(classify_quality(&code, kb)?)
}

pub fn quality_matrix(
    corpus: &[CodingTask],
    kb: &KnowledgeBase,
    client: &dyn ChatClient,
    modes: &[PromptMode],
) -> QualityMatrix {
    let mut m = QualityMatrix::new(modes);
    for &mode in modes {
        for task in corpus {
            let outcome = quality_outcome(task, mode, kb, client).map_err(|e| e.to_string());
            m.record(&task.id, mode, outcome);
        }
    }
    m
}

pub fn llm_eva_prompt(code: &str) -> String {
    format!("{LLM_EVA_PROMPT}\n```java\n{code}\n```")
}

/// Asks the model whether the code handles all exceptions in good practice.
pub fn llm_eva(code: &str, client: &dyn ChatClient) -> Result<bool, EvalError> {
    let response = client.complete(&ChatRequest::new(vec![Message::user(llm_eva_prompt(code))]))?;
    match parse_verdict(&response) {
        Verdict::Yes => Ok(true),
        Verdict::No => Ok(false),
        Verdict::Unparseable => Err(EvalError::UnparseableVerdict(response)),
    }
}

/// Cochran's sample size for proportion `p = 0.5`, rounded to nearest.
/// `margin = 0.05, z = 1.96` gives 384.
pub fn sample_size(margin: f64, z: f64) -> usize {
    (z * z * 0.25 / (margin * margin)).round() as usize
}

/// Same, with the finite-population correction.
pub fn sample_size_finite(population: usize, margin: f64, z: f64) -> usize {
    let n0 = z * z * 0.25 / (margin * margin);
    let n = n0 / (1.0 + (n0 - 1.0) / population as f64);
    (n.round() as usize).min(population)
}

/// `n` distinct indices below `population`, sorted, reproducible for a seed.
pub fn sample_indices(population: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, population, n.min(population)).into_vec();
    picked.sort_unstable();
    picked
}
