//! Model-based checking: ask for the APIs used, then one Y/N question per
//! documented exception.

use std::sync::OnceLock;

use regex::Regex;

use super::prompts::{check_question, LISTING_PROMPT};
use super::{Conversation, Step};
use crate::java::UnhandledException;
use crate::kb::{simple_name, KnowledgeBase, Signature};
use crate::llm::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unparseable,
}

/// Reads the first alphabetic token: `y`/`yes` or `n`/`no`, any case.
pub fn parse_verdict(response: &str) -> Verdict {
    let token = response
        .split(|c: char| !c.is_alphabetic())
        .find(|t| !t.is_empty())
        .map(str::to_lowercase);
    match token.as_deref() {
        Some("y" | "yes") => Verdict::Yes,
        Some("n" | "no") => Verdict::No,
        _ => Verdict::Unparseable,
    }
}

fn method_ref_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)+)\s*\(([^()]*)\)").expect("valid regex")
    })
}

fn param_type(p: &str) -> String {
    let p = p.trim().trim_start_matches("final ");
    let mut depth = 0;
    let mut flat = String::new();
    for c in p.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            _ if depth == 0 => flat.push(c),
            _ => {}
        }
    }
    let mut words: Vec<&str> = flat.split_whitespace().collect();
    if words.len() > 1 {
        words.pop();
    }
    simple_name(&words.join(" ")).to_string()
}

/// KB signatures mentioned in a listing answer, in order of first mention.
/// A mention matches on declaring type, name and parameter types; when the
/// types differ but only one overload has that arity, that overload is taken.
pub fn parse_listed_apis(response: &str, kb: &KnowledgeBase) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for cap in method_ref_re().captures_iter(response) {
        let path = &cap[1];
        let Some((owner, name)) = path.rsplit_once('.') else { continue };
        let params: Vec<String> = cap[2]
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(param_type)
            .collect();
        let cands: Vec<_> = kb
            .candidates(name, params.len())
            .filter(|e| e.declaring_type == owner || simple_name(&e.declaring_type) == owner)
            .collect();
        let exact = cands.iter().find(|e| {
            Signature::parse(&e.fqn)
                .map(|s| s.param_types().iter().map(|t| simple_name(t).to_string()).collect::<Vec<_>>() == params)
                .unwrap_or(false)
        });
        let chosen = exact.or(if cands.len() == 1 { cands.first() } else { None });
        if let Some(e) = chosen {
            if !out.contains(&e.fqn) {
                out.push(e.fqn.clone());
            }
        }
    }
    out
}

pub(super) fn llm_check(conv: &mut Conversation, kb: &KnowledgeBase) -> Result<Vec<UnhandledException>, LlmError> {
    let listing = conv.send(Step::ListApis, LISTING_PROMPT.to_string())?;
    let mut unhandled = Vec::new();
    for api in parse_listed_apis(&listing, kb) {
        for spec in kb.lookup(&api) {
            let answer = conv.send(Step::AskHandled, check_question(&spec.exception, &api))?;
            let item = UnhandledException {
                fqn: api.clone(),
                exception: spec.exception.clone(),
                condition: spec.condition.clone(),
            };
            if parse_verdict(&answer) != Verdict::Yes && !unhandled.contains(&item) {
                unhandled.push(item);
            }
        }
    }
    Ok(unhandled)
}
