//! Exception type hierarchy and subtype queries.
//!
//! Edges map a fully-qualified exception type to its direct supertype. Every
//! chain ends at [`ROOT`]. Names that are not in the table are treated as
//! direct children of the root, so queries never fail on unknown types.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

/// The root of every exception chain.
pub const ROOT: &str = "java.lang.Throwable";

const SHIPPED: &str = include_str!("../../data/hierarchy.json");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("cycle in exception hierarchy through `{0}`")]
    Cycle(String),
    #[error("`{child}` has supertype `{parent}` which is neither the root nor a known type")]
    DanglingSupertype { child: String, parent: String },
    #[error("the root type `{ROOT}` must not have a supertype")]
    RootHasSupertype,
    #[error("invalid hierarchy data: {0}")]
    Data(String),
}

/// How a possibly-simple exception name maps onto the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Canonical {
    Known(String),
    Ambiguous(Vec<String>),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExceptionHierarchy {
    edges: BTreeMap<String, String>,
    by_simple: HashMap<String, Vec<String>>,
}

impl Default for ExceptionHierarchy {
    fn default() -> Self {
        Self::shipped()
    }
}

impl ExceptionHierarchy {
    /// The curated java.lang / java.util / java.io / java.nio table bundled with the crate.
    pub fn shipped() -> Self {
        let edges: BTreeMap<String, String> =
            serde_json::from_str(SHIPPED).expect("bundled hierarchy is valid JSON");
        Self::from_edges(edges).expect("bundled hierarchy is well formed")
    }

    pub fn from_edges(edges: BTreeMap<String, String>) -> Result<Self, HierarchyError> {
        if edges.contains_key(ROOT) {
            return Err(HierarchyError::RootHasSupertype);
        }
        for (child, parent) in &edges {
            if parent != ROOT && !edges.contains_key(parent) {
                return Err(HierarchyError::DanglingSupertype {
                    child: child.clone(),
                    parent: parent.clone(),
                });
            }
        }
        // Every walk must reach the root in at most |edges| steps.
        for start in edges.keys() {
            let mut cur = start.as_str();
            let mut steps = 0usize;
            while let Some(parent) = edges.get(cur) {
                steps += 1;
                if steps > edges.len() {
                    return Err(HierarchyError::Cycle(start.clone()));
                }
                cur = parent;
            }
        }

        let mut by_simple: HashMap<String, Vec<String>> = HashMap::new();
        for name in edges.keys().map(String::as_str).chain(std::iter::once(ROOT)) {
            by_simple
                .entry(simple_name(name).to_string())
                .or_default()
                .push(name.to_string());
        }
        Ok(Self { edges, by_simple })
    }

    /// Adds edges on top of the current table, re-validating the result.
    pub fn extend(&mut self, extra: &BTreeMap<String, String>) -> Result<(), HierarchyError> {
        let mut edges = self.edges.clone();
        edges.extend(extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        *self = Self::from_edges(edges)?;
        Ok(())
    }

    pub fn edges(&self) -> &BTreeMap<String, String> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All type names in the table, root included.
    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.edges.keys().map(String::as_str).chain(std::iter::once(ROOT))
    }

    pub fn canonical(&self, name: &str) -> Canonical {
        let name = name.trim();
        if name == ROOT || self.edges.contains_key(name) {
            return Canonical::Known(name.to_string());
        }
        if name.contains('.') {
            return Canonical::Unknown;
        }
        match self.by_simple.get(name).map(Vec::as_slice) {
            Some([only]) => Canonical::Known(only.clone()),
            Some(many) if !many.is_empty() => Canonical::Ambiguous(many.to_vec()),
            _ => Canonical::Unknown,
        }
    }

    /// Fully-qualified form when the name resolves uniquely, otherwise the name as given.
    pub fn canonical_name(&self, name: &str) -> String {
        match self.canonical(name) {
            Canonical::Known(fqn) => fqn,
            _ => name.trim().to_string(),
        }
    }

    /// Direct supertype. Unknown and ambiguous names hang off the root.
    pub fn supertype(&self, name: &str) -> Option<String> {
        let canon = self.canonical_name(name);
        if canon == ROOT {
            return None;
        }
        Some(
            self.edges
                .get(&canon)
                .cloned()
                .unwrap_or_else(|| ROOT.to_string()),
        )
    }

    /// Chain from the type itself up to the root, both ends included.
    pub fn ancestors(&self, name: &str) -> Vec<String> {
        let mut chain = vec![self.canonical_name(name)];
        while let Some(parent) = self.supertype(chain.last().expect("non-empty")) {
            chain.push(parent);
        }
        chain
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let sup = self.canonical_name(sup);
        self.ancestors(sub).iter().any(|t| same_type(t, &sup))
    }

    /// Strict subtype: `sub` is below `sup` and they are not the same type.
    pub fn is_strict_subtype(&self, sub: &str, sup: &str) -> bool {
        !self.same(sub, sup) && self.is_subtype(sub, sup)
    }

    pub fn same(&self, a: &str, b: &str) -> bool {
        same_type(&self.canonical_name(a), &self.canonical_name(b))
    }
}

/// Equal names, or equal last segments when at least one side is unqualified.
fn same_type(a: &str, b: &str) -> bool {
    a == b || ((!a.contains('.') || !b.contains('.')) && simple_name(a) == simple_name(b))
}

pub fn simple_name(name: &str) -> &str {
    name.rsplit('.').next().unwrap_or(name)
}
