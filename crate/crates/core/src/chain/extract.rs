//! Pulling Java code out of a free-form model response.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extraction {
    /// First fenced code block.
    Fenced,
    /// Longest brace-balanced region, widened to the start of its first line.
    Braces,
    /// The whole response, trimmed.
    Raw,
}

pub fn extract_code(response: &str) -> (String, Extraction) {
    if let Some(code) = first_fenced_block(response) {
        return (code, Extraction::Fenced);
    }
    if let Some(code) = longest_brace_region(response) {
        return (code, Extraction::Braces);
    }
    (response.trim().to_string(), Extraction::Raw)
}

fn first_fenced_block(text: &str) -> Option<String> {
    let open = text.find("```")?;
    let after_tag = open + 3 + text[open + 3..].find('\n')? + 1;
    let close = text[after_tag..].find("```").map(|c| after_tag + c).unwrap_or(text.len());
    let body = text[after_tag..close].trim_end_matches([' ', '\t']).trim_end_matches('\n');
    Some(body.to_string())
}

fn longest_brace_region(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut best: Option<(usize, usize)> = None;
    let mut depth = 0usize;
    let mut open_at = 0;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'{' => {
                if depth == 0 {
                    open_at = i;
                }
                depth += 1;
            }
            b'}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    let start = text[..open_at].rfind('\n').map(|n| n + 1).unwrap_or(0);
                    let len = i + 1 - start;
                    if best.is_none_or(|(s, e)| e - s < len) {
                        best = Some((start, i + 1));
                    }
                }
            }
            _ => {}
        }
    }
    best.map(|(s, e)| text[s..e].to_string())
}

/// Whitespace-insensitive form used to spot repeated code.
pub fn normalize_code(code: &str) -> String {
    code.split_whitespace().collect::<Vec<_>>().join(" ")
}
