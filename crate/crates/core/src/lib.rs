//! Exception-knowledge driven code generation toolkit.
//!
//! - [`kb`]: API exception knowledge base built from documentation pages.
//! - [`java`]: call-site extraction and handling analysis for Java sources.
//! - [`chain`]: the generate, check, rewrite prompt chain.
//! - [`llm`]: chat-completion client with record/replay cassettes.
//! - [`eval`]: loop statistics, quality matrices and sampling.

pub mod chain;
pub mod eval;
pub mod java;
pub mod kb;
pub mod llm;

pub use chain::{
    build_check_prompts, build_exception_prompt, rephrase_task, run_chain, ChainConfig, ChainError, ChainResult,
    CheckerKind, CodingTask, PromptMode, Termination,
};
pub use eval::{llm_eva, loop_stats, quality_matrix, EvalError, LoopStats, QualityMatrix};
pub use java::{
    analyze, classify_quality, collect_unhandled, detect_handling, extract_invocations, resolve, AnalysisReport,
    CallSite, HandlingStatus, ParseError, QualityLabel, Resolution, SourceContext, UnhandledException,
};
pub use kb::{
    kb_load, kb_lookup, kb_save, parse_api_page, parse_throws_clause, ApiEntry, ExceptionHierarchy, ExceptionSpec,
    KnowledgeBase, KnowledgeBaseBuilder,
};
pub use llm::{
    canonical_key, Cassette, ChatClient, ChatRequest, ClientMode, FailingTransport, LlmClient, LlmError, Message,
    Transport,
};
