//! API exception knowledge base.
//!
//! Each documented method (the API entity) throws one or more exceptions, and
//! each exception is triggered by a condition. An [`ApiEntry`] holds the
//! `throw` relation and every [`ExceptionSpec`] holds one `trigger` relation.

mod hierarchy;
mod page;
mod store;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hierarchy::{simple_name, Canonical, ExceptionHierarchy, HierarchyError, ROOT};
pub use page::{html_to_lines, parse_api_page, parse_throws_clause, PageError};
pub use store::{from_json, kb_load, kb_save, to_json, KbFileError, KB_FORMAT_VERSION};

/// One `<exception, condition>` pair taken from a `Throws:` clause.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExceptionSpec {
    pub exception: String,
    pub condition: String,
    pub guardable: bool,
}

impl ExceptionSpec {
    /// Builds a spec, deriving `guardable` from the condition text.
    pub fn new(exception: impl Into<String>, condition: impl Into<String>) -> Self {
        let condition = condition.into();
        let guardable = is_guardable(&condition);
        Self {
            exception: exception.into(),
            condition,
            guardable,
        }
    }
}

/// A condition is a checkable precondition when it starts with the word "if".
pub fn is_guardable(condition: &str) -> bool {
    let mut words = condition.split(|c: char| !c.is_alphanumeric());
    matches!(words.next(), Some(w) if w.eq_ignore_ascii_case("if"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiEntry {
    pub fqn: String,
    pub simple_name: String,
    pub arity: usize,
    pub declaring_type: String,
    pub specs: Vec<ExceptionSpec>,
}

impl ApiEntry {
    /// Builds an entry whose name, arity and declaring type come from the signature.
    pub fn from_fqn(fqn: &str, specs: Vec<ExceptionSpec>) -> Result<Self, SignatureError> {
        let sig = Signature::parse(fqn)?;
        let mut entry = Self {
            fqn: sig.render(),
            simple_name: sig.name,
            arity: sig.params.len(),
            declaring_type: sig.declaring_type,
            specs: Vec::new(),
        };
        for spec in specs {
            entry.push_spec(spec);
        }
        Ok(entry)
    }

    /// Appends a spec unless the same (exception, condition) pair is already present.
    pub fn push_spec(&mut self, spec: ExceptionSpec) -> bool {
        let dup = self
            .specs
            .iter()
            .any(|s| s.exception == spec.exception && s.condition == spec.condition);
        if !dup {
            self.specs.push(spec);
        }
        !dup
    }

    pub fn signature(&self) -> Result<Signature, SignatureError> {
        Signature::parse(&self.fqn)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed method signature `{0}`")]
pub struct SignatureError(pub String);

/// A parsed `pkg.Type.method(T1 a, T2 b)` string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub declaring_type: String,
    pub name: String,
    /// Parameter declarations with whitespace collapsed, e.g. `int index`.
    pub params: Vec<String>,
}

impl Signature {
    pub fn parse(fqn: &str) -> Result<Self, SignatureError> {
        let err = || SignatureError(fqn.to_string());
        let open = fqn.find('(').ok_or_else(err)?;
        let close = fqn.rfind(')').ok_or_else(err)?;
        if close < open || !fqn[close + 1..].trim().is_empty() {
            return Err(err());
        }
        let head = fqn[..open].trim();
        let (declaring_type, name) = head.rsplit_once('.').ok_or_else(err)?;
        if !is_java_identifier(name) || declaring_type.is_empty() {
            return Err(err());
        }
        if !declaring_type.split('.').all(is_java_identifier) {
            return Err(err());
        }
        let params = split_top_level(&fqn[open + 1..close], ',')
            .into_iter()
            .map(|p| collapse_ws(&p))
            .filter(|p| !p.is_empty())
            .collect();
        Ok(Self {
            declaring_type: declaring_type.to_string(),
            name: name.to_string(),
            params,
        })
    }

    pub fn render(&self) -> String {
        format!(
            "{}.{}({})",
            self.declaring_type,
            self.name,
            self.params.join(", ")
        )
    }

    /// Parameter types without names or generic arguments, e.g. `int`, `E`, `List`.
    pub fn param_types(&self) -> Vec<String> {
        self.params
            .iter()
            .map(|p| {
                let mut words: Vec<&str> = p.split_whitespace().collect();
                // `int index` keeps `int`; a bare type keeps itself.
                if words.len() > 1 {
                    words.pop();
                }
                let ty = words.join(" ");
                strip_generics(&ty)
            })
            .collect()
    }
}

pub(crate) fn is_java_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

pub(crate) fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes `<...>` groups, keeping array brackets and varargs dots.
pub(crate) fn strip_generics(ty: &str) -> String {
    let mut depth = 0usize;
    let mut out = String::new();
    for c in ty.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    collapse_ws(&out)
}

/// Splits on `sep` outside of `<>`, `()` and `[]` groups.
pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '<' | '(' | '[' => depth += 1,
            '>' | ')' | ']' => depth -= 1,
            _ => {}
        }
        if c == sep && depth == 0 {
            parts.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    if !cur.trim().is_empty() || !parts.is_empty() {
        parts.push(cur);
    }
    parts
}

/// Where an entry came from and anything worth flagging about it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub sources: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Immutable index from method signature to its exception specifications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    entries: Vec<ApiEntry>,
    index: HashMap<String, usize>,
    by_name: HashMap<(String, usize), Vec<usize>>,
    hierarchy: ExceptionHierarchy,
    provenance: BTreeMap<String, Provenance>,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self::empty()
    }
}

impl KnowledgeBase {
    pub fn empty() -> Self {
        KnowledgeBaseBuilder::new().build()
    }

    pub fn entries(&self) -> &[ApiEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn spec_count(&self) -> usize {
        self.entries.iter().map(|e| e.specs.len()).sum()
    }

    pub fn hierarchy(&self) -> &ExceptionHierarchy {
        &self.hierarchy
    }

    pub fn provenance(&self) -> &BTreeMap<String, Provenance> {
        &self.provenance
    }

    pub fn entry(&self, fqn: &str) -> Option<&ApiEntry> {
        self.index.get(fqn).map(|&i| &self.entries[i])
    }

    /// Specs for `fqn`, empty when the signature is not in the base.
    pub fn lookup(&self, fqn: &str) -> &[ExceptionSpec] {
        self.entry(fqn).map(|e| e.specs.as_slice()).unwrap_or(&[])
    }

    /// Entries sharing a simple method name and parameter count, in KB order.
    pub fn candidates(&self, simple_name: &str, arity: usize) -> impl Iterator<Item = &ApiEntry> {
        self.by_name
            .get(&(simple_name.to_string(), arity))
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }
}

/// Free-function form of [`KnowledgeBase::lookup`].
pub fn kb_lookup<'a>(kb: &'a KnowledgeBase, fqn: &str) -> &'a [ExceptionSpec] {
    kb.lookup(fqn)
}

/// Accumulates entries from parsed pages and freezes them into a [`KnowledgeBase`].
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBaseBuilder {
    entries: Vec<ApiEntry>,
    index: HashMap<String, usize>,
    hierarchy: ExceptionHierarchy,
    provenance: BTreeMap<String, Provenance>,
}

impl KnowledgeBaseBuilder {
    pub fn new() -> Self {
        Self::with_hierarchy(ExceptionHierarchy::shipped())
    }

    pub fn with_hierarchy(hierarchy: ExceptionHierarchy) -> Self {
        Self {
            entries: Vec::new(),
            index: HashMap::new(),
            hierarchy,
            provenance: BTreeMap::new(),
        }
    }

    /// Adds entries parsed from one page. A signature seen before is merged and
    /// the collision is noted in provenance.
    pub fn add_page(&mut self, source: &str, entries: Vec<ApiEntry>) {
        for entry in entries {
            self.add_entry(source, entry);
        }
    }

    pub fn add_entry(&mut self, source: &str, entry: ApiEntry) {
        let fqn = entry.fqn.clone();
        let mut notes = Vec::new();
        for spec in &entry.specs {
            match self.hierarchy.canonical(&spec.exception) {
                Canonical::Known(_) => {}
                Canonical::Ambiguous(all) => notes.push(format!(
                    "exception `{}` is ambiguous ({}); kept as written",
                    spec.exception,
                    all.join(", ")
                )),
                Canonical::Unknown => notes.push(format!(
                    "exception `{}` is not in the hierarchy; treated as a direct subtype of {ROOT}",
                    spec.exception
                )),
            }
        }
        match self.index.get(&fqn) {
            Some(&i) => {
                notes.push(format!("signature collision: merged a second declaration from `{source}`"));
                for spec in entry.specs {
                    self.entries[i].push_spec(spec);
                }
            }
            None => {
                let mut fresh = entry.clone();
                fresh.specs.clear();
                for spec in entry.specs {
                    fresh.push_spec(spec);
                }
                self.index.insert(fqn.clone(), self.entries.len());
                self.entries.push(fresh);
            }
        }
        let prov = self.provenance.entry(fqn).or_default();
        if !prov.sources.iter().any(|s| s == source) {
            prov.sources.push(source.to_string());
        }
        for note in notes {
            if !prov.notes.contains(&note) {
                prov.notes.push(note);
            }
        }
    }

    pub fn build(self) -> KnowledgeBase {
        assemble(self.entries, self.hierarchy, self.provenance)
    }
}

pub(crate) fn assemble(
    entries: Vec<ApiEntry>,
    hierarchy: ExceptionHierarchy,
    provenance: BTreeMap<String, Provenance>,
) -> KnowledgeBase {
    let mut index = HashMap::new();
    let mut by_name: HashMap<(String, usize), Vec<usize>> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        index.insert(e.fqn.clone(), i);
        by_name
            .entry((e.simple_name.clone(), e.arity))
            .or_default()
            .push(i);
    }
    KnowledgeBase {
        entries,
        index,
        by_name,
        hierarchy,
        provenance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GET: &str = "java.util.Vector.get(int index)";
    const SET: &str = "java.util.Vector.set(int index, E element)";
    const RANGE: &str = "if the index is out of range (index < 0 || index >= size())";

    fn vector_kb() -> KnowledgeBase {
        let mut b = KnowledgeBaseBuilder::new();
        b.add_page(
            "Vector.html",
            vec![
                ApiEntry::from_fqn(GET, vec![ExceptionSpec::new("ArrayIndexOutOfBoundsException", RANGE)]).unwrap(),
                ApiEntry::from_fqn(SET, vec![ExceptionSpec::new("ArrayIndexOutOfBoundsException", RANGE)]).unwrap(),
            ],
        );
        b.build()
    }

    #[test]
    fn lookup_hits_and_misses() {
        let kb = vector_kb();
        let specs = kb_lookup(&kb, GET);
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].exception, "ArrayIndexOutOfBoundsException");
        assert_eq!(specs[0].condition, RANGE);
        assert!(specs[0].guardable);
        assert_eq!(kb_lookup(&kb, SET).len(), 1);
        assert!(kb_lookup(&kb, "com.example.Nothing.none()").is_empty());
    }

    #[test]
    fn signature_fields_follow_the_fqn() {
        let e = ApiEntry::from_fqn(SET, vec![]).unwrap();
        assert_eq!(e.simple_name, "set");
        assert_eq!(e.arity, 2);
        assert_eq!(e.declaring_type, "java.util.Vector");
        let sig = Signature::parse("java.util.Map.put(K key, Map<String, List<V>> value)").unwrap();
        assert_eq!(sig.params.len(), 2);
        assert_eq!(sig.param_types(), vec!["K", "Map"]);
        assert_eq!(Signature::parse("java.lang.Thread.interrupt()").unwrap().params.len(), 0);
        assert!(Signature::parse("noparens").is_err());
        assert!(Signature::parse("nodot()").is_err());
    }

    #[test]
    fn duplicate_specs_are_dropped_and_collisions_noted() {
        let mut b = KnowledgeBaseBuilder::new();
        let spec = ExceptionSpec::new("ArrayIndexOutOfBoundsException", RANGE);
        b.add_page("a", vec![ApiEntry::from_fqn(GET, vec![spec.clone(), spec.clone()]).unwrap()]);
        b.add_page("b", vec![ApiEntry::from_fqn(GET, vec![spec]).unwrap()]);
        let kb = b.build();
        assert_eq!(kb.len(), 1);
        assert_eq!(kb.lookup(GET).len(), 1);
        let prov = &kb.provenance()[GET];
        assert_eq!(prov.sources, vec!["a", "b"]);
        assert!(prov.notes.iter().any(|n| n.contains("collision")));
    }

    #[test]
    fn guardable_needs_a_leading_if() {
        assert!(is_guardable("if the index is out of range"));
        assert!(is_guardable("If size is negative"));
        assert!(!is_guardable(""));
        assert!(!is_guardable("when an I/O error occurs"));
        assert!(!is_guardable("iffy"));
    }
}
