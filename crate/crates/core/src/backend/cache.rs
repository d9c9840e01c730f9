//! Content-addressed response cache: one file per entry, filename = hex hash
//! of the canonical request, content = canonical request metadata plus the
//! response. Entries publish atomically via write-temp-then-rename.

use super::BackendError;
use crate::chat::{ChatRequest, ChatResponse};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    request: serde_json::Value,
    response: ChatResponse,
}

/// Read an entry, verifying that the stored request still hashes to `key`.
/// Any mismatch or parse failure discards the entry and reads as a miss.
pub(crate) fn read_entry(dir: &Path, key: &str) -> Option<ChatResponse> {
    let path = dir.join(format!("{key}.json"));
    let bytes = std::fs::read(&path).ok()?;
    let parsed: Result<Entry, _> = serde_json::from_slice(&bytes);
    let entry = match parsed {
        Ok(e) => e,
        Err(err) => {
            log::warn!("discarding unreadable cache entry {}: {err}", path.display());
            let _ = std::fs::remove_file(&path);
            return None;
        }
    };
    let canon = serde_json::to_string(&entry.request).ok()?;
    let rehash = hex::encode(Sha256::digest(canon.as_bytes()));
    if entry.key != key || rehash != key {
        log::warn!(
            "discarding corrupt cache entry {} (hash mismatch)",
            path.display()
        );
        let _ = std::fs::remove_file(&path);
        return None;
    }
    Some(entry.response)
}

pub(crate) fn write_entry(
    dir: &Path,
    key: &str,
    request: &ChatRequest,
    response: &ChatResponse,
) -> Result<(), BackendError> {
    let entry = Entry {
        key: key.to_string(),
        request: request.canonical_value(),
        response: ChatResponse {
            from_cache: false,
            ..response.clone()
        },
    };
    let body = serde_json::to_vec_pretty(&entry).map_err(|e| BackendError::CacheIo(e.to_string()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| BackendError::CacheIo(e.to_string()))?;
    tmp.write_all(&body)
        .map_err(|e| BackendError::CacheIo(e.to_string()))?;
    tmp.persist(dir.join(format!("{key}.json")))
        .map_err(|e| BackendError::CacheIo(e.to_string()))?;
    Ok(())
}

/// A directory of cached responses keyed by canonical request hash.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: &Path) -> Result<Self, BackendError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            BackendError::CacheIo(format!("cannot create cache dir {}: {e}", dir.display()))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, key: &str) -> Option<ChatResponse> {
        read_entry(&self.dir, key)
    }

    pub fn put(
        &self,
        key: &str,
        request: &ChatRequest,
        response: &ChatResponse,
    ) -> Result<(), BackendError> {
        write_entry(&self.dir, key, request, response)
    }
}
