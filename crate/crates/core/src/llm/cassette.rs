//! Append-only, content-addressed store of request/response pairs.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatRequest, LlmError, Role};

/// One cassette line. Field order is fixed so files diff cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CassetteEntry {
    pub key: String,
    pub request: ChatRequest,
    pub response: String,
    pub recorded_at: String,
}

impl CassetteEntry {
    pub fn new(request: ChatRequest, response: String) -> Self {
        Self {
            key: canonical_key(&request),
            request,
            response,
            recorded_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

#[derive(Serialize)]
struct CanonicalMessage<'a> {
    content: &'a str,
    role: Role,
}

#[derive(Serialize)]
struct CanonicalRequest<'a> {
    messages: Vec<CanonicalMessage<'a>>,
    model: &'a str,
    temperature: f64,
}

/// SHA-256 over the request's messages, model and temperature, serialized as
/// JSON with sorted keys. Content is hashed byte for byte; `max_tokens` is
/// not part of the key.
pub fn canonical_key(request: &ChatRequest) -> String {
    let canon = CanonicalRequest {
        messages: request
            .messages
            .iter()
            .map(|m| CanonicalMessage { content: &m.content, role: m.role })
            .collect(),
        model: &request.model,
        temperature: request.temperature,
    };
    let bytes = serde_json::to_vec(&canon).expect("request serializes");
    hex::encode(Sha256::digest(&bytes))
}

type Index = Arc<HashMap<String, String>>;

/// Appends go through one writer; lookups read an immutable snapshot that is
/// swapped after each append.
#[derive(Debug)]
pub struct Cassette {
    path: Option<PathBuf>,
    writer: Mutex<Option<File>>,
    index: RwLock<Index>,
    len: Mutex<usize>,
}

impl Cassette {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            writer: Mutex::new(None),
            index: RwLock::new(Arc::new(HashMap::new())),
            len: Mutex::new(0),
        }
    }

    /// Loads an existing cassette, or starts an empty one if the file is absent.
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        let mut map = HashMap::new();
        let mut count = 0;
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CassetteEntry = serde_json::from_str(line).map_err(|e| {
                    LlmError::Cassette(format!("{} line {}: {e}", path.display(), n + 1))
                })?;
                if entry.key != canonical_key(&entry.request) {
                    return Err(LlmError::Cassette(format!(
                        "{} line {}: key does not match request",
                        path.display(),
                        n + 1
                    )));
                }
                map.entry(entry.key).or_insert(entry.response);
                count += 1;
            }
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            writer: Mutex::new(None),
            index: RwLock::new(Arc::new(map)),
            len: Mutex::new(count),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// First recorded response for `key`.
    pub fn get(&self, key: &str) -> Option<String> {
        let snapshot = self.index.read().expect("index lock").clone();
        snapshot.get(key).cloned()
    }

    /// Number of lines recorded, duplicates included.
    pub fn len(&self) -> usize {
        *self.len.lock().expect("len lock")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn append(&self, entry: CassetteEntry) -> Result<(), LlmError> {
        let mut writer = self.writer.lock().expect("writer lock");
        if let Some(path) = &self.path {
            if writer.is_none() {
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
                *writer = Some(file);
            }
            let mut line = serde_json::to_string(&entry).expect("entry serializes");
            line.push('\n');
            let file = writer.as_mut().expect("opened above");
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
        }
        let mut next = (**self.index.read().expect("index lock")).clone();
        next.entry(entry.key).or_insert(entry.response);
        *self.index.write().expect("index lock") = Arc::new(next);
        *self.len.lock().expect("len lock") += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Message;

    fn req(t: f64, msgs: &[&str]) -> ChatRequest {
        let mut r = ChatRequest::new(msgs.iter().map(|m| Message::user(*m)).collect());
        r.temperature = t;
        r
    }

    #[test]
    fn key_properties() {
        assert_eq!(canonical_key(&req(0.0, &["a"])), canonical_key(&req(0.0, &["a"])));
        assert_ne!(canonical_key(&req(0.0, &["a"])), canonical_key(&req(0.7, &["a"])));
        assert_ne!(canonical_key(&req(0.0, &["a", "b"])), canonical_key(&req(0.0, &["b", "a"])));
        let mut more = req(0.0, &["a"]);
        more.max_tokens = 7;
        assert_eq!(canonical_key(&more), canonical_key(&req(0.0, &["a"])));
        assert_ne!(canonical_key(&req(0.0, &["a "])), canonical_key(&req(0.0, &["a"])));
    }

    #[test]
    fn golden_digest() {
        // sha256 of {"messages":[{"content":"hello","role":"user"}],"model":"gpt-3.5-turbo","temperature":0.0}
        assert_eq!(
            canonical_key(&req(0.0, &["hello"])),
            "910d7bda51a0ac088045b55547eda814c7fa78a9fc23187f9d75c895a084dd17"
        );
    }

    #[test]
    fn append_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let tape = Cassette::open(&path).unwrap();
        tape.append(CassetteEntry::new(req(0.0, &["q"]), "first".into())).unwrap();
        let before = std::fs::read_to_string(&path).unwrap();
        tape.append(CassetteEntry::new(req(0.0, &["q"]), "second".into())).unwrap();
        let after = std::fs::read_to_string(&path).unwrap();
        assert!(after.starts_with(&before));
        assert_eq!(tape.get(&canonical_key(&req(0.0, &["q"]))).as_deref(), Some("first"));
        let reopened = Cassette::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        assert_eq!(reopened.get(&canonical_key(&req(0.0, &["q"]))).as_deref(), Some("first"));
        let line = after.lines().next().unwrap();
        assert!(line.starts_with("{\"key\":"));
        let order: Vec<usize> = ["\"key\"", "\"request\"", "\"response\"", "\"recorded_at\""]
            .iter()
            .map(|f| line.find(f).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }
}
