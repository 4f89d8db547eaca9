use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

/// Content hash of (model, prompt, attempt).
pub fn cache_key(model_name: &str, prompt: &str, attempt: usize) -> String {
    let mut h = Sha256::new();
    h.update(model_name.as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    h.update([0]);
    h.update(attempt.to_string().as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedReply {
    pub model_name: String,
    pub attempt: usize,
    pub raw_text: String,
    pub latency_ms: u64,
}

/// Directory of `<key>.json` files, sharded by the first two hex digits.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, LlmError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| LlmError::Cache(format!("{}: {e}", root.display())))?;
        Ok(ResponseCache { root })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<CachedReply> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, reply: &CachedReply) -> Result<(), LlmError> {
        let path = self.path(key);
        let err = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", path.display()));
        fs::create_dir_all(path.parent().expect("sharded path")).map_err(err)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let body = serde_json::to_string_pretty(reply).map_err(|e| LlmError::Cache(e.to_string()))?;
        fs::write(&tmp, body).map_err(err)?;
        fs::rename(&tmp, &path).map_err(err)
    }
}
