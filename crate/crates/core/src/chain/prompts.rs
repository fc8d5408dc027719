//! Prompt templates. Every prompt the chain sends is built here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::java::UnhandledException;
use crate::kb::KnowledgeBase;

pub const TASK_PREFIX: &str = "Please write a Java method to ";
pub const TASK_PREFIX_THAT: &str = "Please write a Java method that ";
pub const GENERAL_PROMPT: &str = "Please pay attention to potential exceptions.";
pub const LISTING_PROMPT: &str =
    "What Java SDK & JDK methods are used in the method you provided? Please list the fully qualified names of the methods.";
pub const LLM_EVA_PROMPT: &str = "Can the code handle all exceptions in good practice? (Y/N)?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptMode {
    Direct,
    General,
    Coarse,
    Fine,
}

impl PromptMode {
    pub const ALL: [PromptMode; 4] = [PromptMode::Direct, PromptMode::General, PromptMode::Coarse, PromptMode::Fine];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::Direct => "direct",
            PromptMode::General => "general",
            PromptMode::Coarse => "coarse",
            PromptMode::Fine => "fine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for PromptMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("{0} prompts need at least one unhandled exception")]
    EmptyItems(PromptMode),
    #[error("direct mode has no exception prompt")]
    DirectMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingTask {
    pub id: String,
    pub text: String,
}

impl CodingTask {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into() }
    }
}

/// "How to X" becomes "Please write a Java method to X".
pub fn rephrase_task(task: &CodingTask) -> String {
    let text = task.text.trim();
    if text.starts_with(TASK_PREFIX.trim_end()) {
        return text.to_string();
    }
    if let Some(head) = text.get(..7) {
        if head.eq_ignore_ascii_case("how to ") {
            let rest = text[7..].trim();
            let rest = rest.strip_suffix('?').map(str::trim_end).unwrap_or(rest);
            return format!("{TASK_PREFIX}{rest}");
        }
    }
    format!("{TASK_PREFIX_THAT}{text}")
}

pub fn fine_sentence(item: &UnhandledException) -> String {
    format!(
        "Please check {} for {}, otherwise throw {}",
        item.condition, item.fqn, item.exception
    )
}

/// The rewrite instruction for one round.
///
/// Fine sentences are joined with ". " and carry no final period, so a pair
/// of Vector items reads exactly like the worked example of the method.
pub fn build_exception_prompt(mode: PromptMode, items: &[UnhandledException]) -> Result<String, PromptError> {
    match mode {
        PromptMode::Direct => Err(PromptError::DirectMode),
        PromptMode::General => Ok(GENERAL_PROMPT.to_string()),
        PromptMode::Coarse => {
            if items.is_empty() {
                return Err(PromptError::EmptyItems(mode));
            }
            let mut seen = Vec::new();
            for it in items {
                if !seen.contains(&it.exception.as_str()) {
                    seen.push(&it.exception);
                }
            }
            Ok(seen
                .iter()
                .map(|e| format!("Please pay attention to {e}."))
                .collect::<Vec<_>>()
                .join(" "))
        }
        PromptMode::Fine => {
            if items.is_empty() {
                return Err(PromptError::EmptyItems(mode));
            }
            Ok(items.iter().map(fine_sentence).collect::<Vec<_>>().join(". "))
        }
    }
}

pub fn check_question(exception: &str, api: &str) -> String {
    format!("Is the {exception} handled for {api} in the code snippets? (Y/N)")
}

/// The listing prompt plus one Y/N question per (api, exception) pair, in KB order.
pub fn build_check_prompts(apis: &[String], kb: &KnowledgeBase) -> (String, Vec<String>) {
    let questions = apis
        .iter()
        .flat_map(|api| kb.lookup(api).iter().map(move |s| check_question(&s.exception, api)))
        .collect();
    (LISTING_PROMPT.to_string(), questions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(fqn: &str) -> UnhandledException {
        UnhandledException {
            fqn: fqn.into(),
            exception: "ArrayIndexOutOfBoundsException".into(),
            condition: "if the index is out of range (index < 0 || index >= size())".into(),
        }
    }

    #[test]
    fn rephrasing() {
        let t = |s: &str| rephrase_task(&CodingTask::new("t", s));
        assert_eq!(t("How to swap two elements in a vector"), "Please write a Java method to swap two elements in a vector");
        assert_eq!(t("how to sort a list?"), "Please write a Java method to sort a list");
        assert_eq!(t("Please write a Java method to X"), "Please write a Java method to X");
        assert_eq!(
            t("removes the char at the specified position in this sequence"),
            "Please write a Java method that removes the char at the specified position in this sequence"
        );
    }

    #[test]
    fn coarse_dedups_exceptions() {
        let items = [item("a.B.c()"), item("a.B.d()")];
        assert_eq!(
            build_exception_prompt(PromptMode::Coarse, &items).unwrap(),
            "Please pay attention to ArrayIndexOutOfBoundsException."
        );
        let mut other = item("a.B.e()");
        other.exception = "NullPointerException".into();
        assert_eq!(
            build_exception_prompt(PromptMode::Coarse, &[item("x.Y.z()"), other]).unwrap(),
            "Please pay attention to ArrayIndexOutOfBoundsException. Please pay attention to NullPointerException."
        );
    }

    #[test]
    fn errors() {
        assert_eq!(build_exception_prompt(PromptMode::Fine, &[]), Err(PromptError::EmptyItems(PromptMode::Fine)));
        assert_eq!(build_exception_prompt(PromptMode::Coarse, &[]), Err(PromptError::EmptyItems(PromptMode::Coarse)));
        assert_eq!(build_exception_prompt(PromptMode::Direct, &[]), Err(PromptError::DirectMode));
        assert_eq!(build_exception_prompt(PromptMode::General, &[]).unwrap(), GENERAL_PROMPT);
    }
}
