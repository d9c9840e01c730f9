//! Recorded-fixture backend: a directory of (request key -> response) pairs.
//!
//! In replay mode, a request whose key has no recording is an error. In
//! record mode, misses fall through to an inner backend and the response is
//! persisted, which is how fixture directories are produced in the first
//! place.

use super::cache::{read_entry, write_entry};
use super::{Backend, BackendError, CallContext};
use crate::chat::{ChatRequest, ChatResponse};
use std::path::{Path, PathBuf};

pub struct FixtureBackend {
    dir: PathBuf,
    inner: Option<Box<dyn Backend>>,
}

impl FixtureBackend {
    /// Replay-only: every request must have a recording.
    pub fn replay(dir: &Path) -> Result<Self, BackendError> {
        if !dir.is_dir() {
            return Err(BackendError::Config(format!(
                "fixture directory {} does not exist",
                dir.display()
            )));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            inner: None,
        })
    }

    /// Record-on-miss through `inner`.
    pub fn record(dir: &Path, inner: Box<dyn Backend>) -> Result<Self, BackendError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            BackendError::Config(format!("cannot create fixture dir {}: {e}", dir.display()))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            inner: Some(inner),
        })
    }
}

impl Backend for FixtureBackend {
    fn complete(
        &self,
        request: &ChatRequest,
        ctx: Option<&CallContext>,
    ) -> Result<ChatResponse, BackendError> {
        let key = request.cache_key();
        if let Some(mut recorded) = read_entry(&self.dir, &key) {
            // A fixture read is a replay, not a cache hit.
            recorded.from_cache = false;
            return Ok(recorded);
        }
        match &self.inner {
            Some(inner) => {
                let response = inner.complete(request, ctx)?;
                write_entry(&self.dir, &key, request, &response)?;
                Ok(response)
            }
            None => Err(BackendError::FixtureMissing { key }),
        }
    }

    fn name(&self) -> String {
        match self.inner {
            Some(_) => "fixture:record".into(),
            None => "fixture:replay".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::testutil::{text_response, ProbeBackend};
    use crate::chat::{Decoding, Message};

    fn request(text: &str) -> ChatRequest {
        ChatRequest::new("m", vec![Message::user(text)], Decoding::default()).unwrap()
    }

    #[test]
    fn replay_returns_recorded_bytes_not_cache() {
        let dir = tempfile::tempdir().unwrap();
        let recorder = FixtureBackend::record(
            dir.path(),
            Box::new(ProbeBackend::new(|_| Ok(text_response("recorded text")))),
        )
        .unwrap();
        let req = request("q");
        recorder.complete(&req, None).unwrap();

        let replay = FixtureBackend::replay(dir.path()).unwrap();
        let a = replay.complete(&req, None).unwrap();
        let b = replay.complete(&req, None).unwrap();
        assert_eq!(a.text, "recorded text");
        assert_eq!(a.text, b.text);
        assert!(!a.from_cache, "fixture replay is not a cache hit");
    }

    #[test]
    fn replay_misses_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let replay = FixtureBackend::replay(dir.path()).unwrap();
        assert!(matches!(
            replay.complete(&request("unseen"), None),
            Err(BackendError::FixtureMissing { .. })
        ));
    }

    #[test]
    fn record_mode_calls_inner_once_per_key() {
        use std::sync::atomic::{AtomicU64, Ordering};
        use std::sync::Arc;

        let dir = tempfile::tempdir().unwrap();
        let calls = Arc::new(AtomicU64::new(0));
        let seen = calls.clone();
        let recorder = FixtureBackend::record(
            dir.path(),
            Box::new(ProbeBackend::new(move |_| {
                seen.fetch_add(1, Ordering::SeqCst);
                Ok(text_response("x"))
            })),
        )
        .unwrap();
        let req = request("q");
        recorder.complete(&req, None).unwrap();
        recorder.complete(&req, None).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        let entries = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(entries, 1);
    }
}
