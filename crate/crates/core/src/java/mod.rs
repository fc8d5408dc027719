//! Static analysis of exception handling in Java sources.

pub mod analysis;
pub mod ast;
pub mod lexer;
pub mod parser;

use thiserror::Error;

pub use analysis::{
    analyze, analyze_context, classify_quality, collect_unhandled, detect_handling, extract_invocations, resolve,
    AnalysisError, AnalysisReport, CallSite, HandlingStatus, QualityLabel, Resolution, SiteSummary,
    SourceContext, StatusRecord, UnhandledException,
};
pub use parser::{parse_compilation_unit, parse_expression};

/// Syntax error with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// Byte offset of the error in the source.
    pub offset: usize,
}

impl ParseError {
    pub fn at(src: &str, offset: usize, message: impl Into<String>) -> Self {
        let offset = offset.min(src.len());
        let before = &src[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
        let column = src[line_start..offset].chars().count() + 1;
        Self { line, column, message: message.into(), offset }
    }
}
