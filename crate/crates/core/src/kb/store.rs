//! Versioned JSON persistence for [`KnowledgeBase`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{assemble, ApiEntry, ExceptionHierarchy, KnowledgeBase, Provenance, Signature};

pub const KB_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum KbFileError {
    #[error("unsupported knowledge base format version {found} (expected {KB_FORMAT_VERSION})")]
    FormatVersionMismatch { found: u32 },
    #[error("schema violation: {reason} in record {record}")]
    SchemaViolation { reason: String, record: String },
    #[error("knowledge base is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Serialize)]
struct KbFileOut<'a> {
    version: u32,
    entries: &'a [ApiEntry],
    hierarchy: &'a BTreeMap<String, String>,
    provenance: &'a BTreeMap<String, Provenance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KbFileIn {
    version: u32,
    entries: Vec<ApiEntry>,
    #[serde(default)]
    hierarchy: BTreeMap<String, String>,
    #[serde(default)]
    provenance: BTreeMap<String, Provenance>,
}

pub fn to_json(kb: &KnowledgeBase) -> String {
    let out = KbFileOut {
        version: KB_FORMAT_VERSION,
        entries: kb.entries(),
        hierarchy: kb.hierarchy().edges(),
        provenance: kb.provenance(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("knowledge base serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<KnowledgeBase, KbFileError> {
    #[derive(Deserialize)]
    struct VersionOnly {
        version: u32,
    }
    let v: VersionOnly = serde_json::from_str(text)?;
    if v.version != KB_FORMAT_VERSION {
        return Err(KbFileError::FormatVersionMismatch { found: v.version });
    }
    let file: KbFileIn = serde_json::from_str(text)?;
    let _ = file.version;
    validate(file)
}

fn violation(reason: impl Into<String>, record: &impl Serialize) -> KbFileError {
    KbFileError::SchemaViolation {
        reason: reason.into(),
        record: serde_json::to_string(record).unwrap_or_default(),
    }
}

fn validate(file: KbFileIn) -> Result<KnowledgeBase, KbFileError> {
    let mut hierarchy = ExceptionHierarchy::shipped();
    hierarchy
        .extend(&file.hierarchy)
        .map_err(|e| violation(e.to_string(), &file.hierarchy))?;

    let mut seen = HashSet::new();
    for entry in &file.entries {
        if !seen.insert(entry.fqn.as_str()) {
            return Err(violation("duplicate fqn", entry));
        }
        let sig = Signature::parse(&entry.fqn).map_err(|e| violation(e.to_string(), entry))?;
        if sig.name != entry.simple_name || sig.params.len() != entry.arity {
            return Err(violation("simple_name/arity disagree with fqn", entry));
        }
        if sig.declaring_type != entry.declaring_type {
            return Err(violation("declaring_type disagrees with fqn", entry));
        }
        let mut pairs = HashSet::new();
        for spec in &entry.specs {
            if spec.exception.trim().is_empty() {
                return Err(violation("empty exception name", entry));
            }
            if spec.condition.is_empty() && spec.guardable {
                return Err(violation("guardable spec without a condition", entry));
            }
            if !pairs.insert((&spec.exception, &spec.condition)) {
                return Err(violation("duplicate (exception, condition) pair", entry));
            }
        }
    }
    for fqn in file.provenance.keys() {
        if !seen.contains(fqn.as_str()) {
            return Err(violation("provenance for unknown entry", fqn));
        }
    }
    Ok(assemble(file.entries, hierarchy, file.provenance))
}

/// Writes the knowledge base atomically (temporary file, then rename).
pub fn kb_save(kb: &KnowledgeBase, path: &Path) -> Result<(), KbFileError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, to_json(kb))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn kb_load(path: &Path) -> Result<KnowledgeBase, KbFileError> {
    from_json(&fs::read_to_string(path)?)
}
