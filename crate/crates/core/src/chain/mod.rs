//! The generate, check, rewrite chain.

mod checker;
mod extract;
mod prompts;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::java::{classify_quality, ParseError, QualityLabel, UnhandledException};
use crate::kb::KnowledgeBase;
use crate::llm::{ChatClient, ChatRequest, LlmError, Message, Role, DEFAULT_MAX_TOKENS, DEFAULT_MODEL};

pub use checker::{parse_listed_apis, parse_verdict, Verdict};
pub use extract::{extract_code, normalize_code, Extraction};
pub use prompts::{
    build_check_prompts, build_exception_prompt, check_question, fine_sentence, rephrase_task, CodingTask,
    PromptError, PromptMode, GENERAL_PROMPT, LISTING_PROMPT, LLM_EVA_PROMPT, TASK_PREFIX, TASK_PREFIX_THAT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckerKind {
    Deterministic,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub mode: PromptMode,
    pub max_loops: usize,
    pub checker: CheckerKind,
    pub oscillation_detection: bool,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Conversation budget in characters; oldest exchanges are dropped first.
    pub context_limit_chars: Option<usize>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            mode: PromptMode::Fine,
            max_loops: 10,
            checker: CheckerKind::Deterministic,
            oscillation_detection: true,
            model: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            context_limit_chars: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Generate,
    ListApis,
    AskHandled,
    Rewrite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub step: Step,
    pub prompt: String,
    pub response: String,
    /// How code was taken from the response, for generate and rewrite steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<Extraction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    LoopCapReached,
    Oscillation,
    LlmError { loop_index: usize, message: String },
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Converged => "Converged",
            Termination::LoopCapReached => "LoopCapReached",
            Termination::Oscillation => "Oscillation",
            Termination::LlmError { .. } => "LlmError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainResult {
    pub final_code: String,
    pub loop_count: usize,
    pub unhandled_per_loop: Vec<usize>,
    pub termination: Termination,
    pub transcript: Vec<Exchange>,
    /// `None` when the final code has no documented APIs or does not parse.
    pub quality: Option<QualityLabel>,
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("task `{0}` has empty text")]
    EmptyTask(String),
    #[error("checker could not parse the code of loop {loop_index}: {error}")]
    Parse {
        loop_index: usize,
        error: ParseError,
        code: String,
        transcript: Vec<Exchange>,
    },
}

/// Message history shared by all steps of one run.
struct Conversation<'a> {
    client: &'a dyn ChatClient,
    config: &'a ChainConfig,
    history: Vec<Message>,
    /// Index in `history` of the newest code-bearing reply.
    code_at: Option<usize>,
    transcript: Vec<Exchange>,
}

impl<'a> Conversation<'a> {
    fn new(client: &'a dyn ChatClient, config: &'a ChainConfig) -> Self {
        Self { client, config, history: Vec::new(), code_at: None, transcript: Vec::new() }
    }

    fn send(&mut self, step: Step, prompt: String) -> Result<String, LlmError> {
        self.history.push(Message::user(prompt.clone()));
        self.truncate();
        let request = ChatRequest {
            messages: self.history.clone(),
            model: self.config.model.clone(),
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        match self.client.complete(&request) {
            Ok(response) => {
                self.history.push(Message::assistant(response.clone()));
                self.transcript.push(Exchange { step, prompt, response: response.clone(), extraction: None });
                Ok(response)
            }
            Err(e) => {
                self.history.pop();
                Err(e)
            }
        }
    }

    /// Sends a prompt whose reply carries code, and extracts it.
    fn send_for_code(&mut self, step: Step, prompt: String) -> Result<String, LlmError> {
        let response = self.send(step, prompt)?;
        let (code, how) = extract_code(&response);
        if let Some(last) = self.transcript.last_mut() {
            last.extraction = Some(how);
        }
        self.code_at = Some(self.history.len() - 1);
        Ok(code)
    }

    fn truncate(&mut self) {
        let Some(limit) = self.config.context_limit_chars else { return };
        let size = |h: &[Message]| h.iter().map(|m| m.content.len()).sum::<usize>();
        while size(&self.history) > limit && self.history.len() > 2 {
            // drop the oldest user/assistant pair unless it holds the latest code
            if self.code_at.is_some_and(|c| c < 2) || self.history[1].role != Role::Assistant {
                break;
            }
            self.history.drain(..2);
            self.code_at = self.code_at.map(|c| c - 2);
        }
    }
}

type State = (String, BTreeSet<(String, String)>);

fn state_of(code: &str, unhandled: &[UnhandledException]) -> State {
    let digest = hex::encode(Sha256::digest(normalize_code(code).as_bytes()));
    let set = unhandled.iter().map(|u| (u.fqn.clone(), u.exception.clone())).collect();
    (digest, set)
}

/// Runs one task through generation and the check/rewrite loop.
///
/// A loop is one check, followed by a rewrite when the check is not clean.
/// Oscillation is reported when the (code, unhandled set) state returns to an
/// earlier value after having changed; a state that simply repeats is left to
/// the loop cap.
pub fn run_chain(
    task: &CodingTask,
    kb: &KnowledgeBase,
    client: &dyn ChatClient,
    config: &ChainConfig,
) -> Result<ChainResult, ChainError> {
    if config.max_loops == 0 {
        return Err(ChainError::InvalidConfig("max_loops must be at least 1".into()));
    }
    if task.text.trim().is_empty() {
        return Err(ChainError::EmptyTask(task.id.clone()));
    }
    let mut conv = Conversation::new(client, config);
    let mut per_loop = Vec::new();
    let finish = |conv: Conversation, code: String, per_loop: Vec<usize>, termination: Termination| {
        let quality = classify_quality(&code, kb).ok();
        ChainResult {
            loop_count: per_loop.len(),
            unhandled_per_loop: per_loop,
            final_code: code,
            termination,
            transcript: conv.transcript,
            quality,
        }
    };

    let mut code = match conv.send_for_code(Step::Generate, rephrase_task(task)) {
        Ok(c) => c,
        Err(e) => {
            let t = Termination::LlmError { loop_index: 0, message: e.to_string() };
            return Ok(finish(conv, String::new(), per_loop, t));
        }
    };

    let mut seen: Vec<State> = Vec::new();
    for loop_index in 1..=config.max_loops {
        let unhandled = match config.checker {
            CheckerKind::Deterministic => match crate::java::collect_unhandled(&code, kb) {
                Ok(u) => u,
                Err(error) => {
                    return Err(ChainError::Parse { loop_index, error, code, transcript: conv.transcript });
                }
            },
            CheckerKind::Llm => match checker::llm_check(&mut conv, kb) {
                Ok(u) => u,
                Err(e) => {
                    let t = Termination::LlmError { loop_index, message: e.to_string() };
                    return Ok(finish(conv, code, per_loop, t));
                }
            },
        };
        per_loop.push(unhandled.len());
        if unhandled.is_empty() {
            return Ok(finish(conv, code, per_loop, Termination::Converged));
        }
        if config.oscillation_detection {
            let state = state_of(&code, &unhandled);
            let changed = seen.last().is_some_and(|prev| prev != &state);
            if changed && seen.contains(&state) {
                return Ok(finish(conv, code, per_loop, Termination::Oscillation));
            }
            seen.push(state);
        }
        if config.mode == PromptMode::Direct || loop_index == config.max_loops {
            return Ok(finish(conv, code, per_loop, Termination::LoopCapReached));
        }
        let prompt = build_exception_prompt(config.mode, &unhandled).expect("non-empty items outside direct mode");
        code = match conv.send_for_code(Step::Rewrite, prompt) {
            Ok(c) => c,
            Err(e) => {
                let t = Termination::LlmError { loop_index, message: e.to_string() };
                return Ok(finish(conv, code, per_loop, t));
            }
        };
    }
    unreachable!("the loop returns on its last iteration")
}
