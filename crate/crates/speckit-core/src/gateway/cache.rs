//! Content-addressed response cache.
//!
//! One file per request hash: `cache/<hash>.json` holding the request, the
//! response, and a record timestamp. Writes are serialized and atomic
//! (temp file + rename) so concurrent recorders cannot corrupt an entry.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{GatewayError, ModelRequest};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: ModelRequest,
    pub response: String,
    /// Seconds since the Unix epoch at record time.
    pub timestamp: u64,
}

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            write_lock: Mutex::new(()),
        }
    }

    pub fn dir(&self) -> &PathBuf {
        &self.dir
    }

    fn entry_path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// Lock-free read path used by replay mode.
    pub fn get(&self, hash: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.entry_path(hash);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(err) => return Err(GatewayError::CacheIo { path, source: err }),
        };
        let entry: CacheEntry =
            serde_json::from_str(&raw).map_err(|err| GatewayError::CacheIo {
                path,
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, err),
            })?;
        Ok(Some(entry))
    }

    pub fn put(
        &self,
        hash: &str,
        request: &ModelRequest,
        response: &str,
    ) -> Result<(), GatewayError> {
        let _guard = self.write_lock.lock().unwrap();
        let entry = CacheEntry {
            request: request.clone(),
            response: response.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let path = self.entry_path(hash);
        let io_err = |err| GatewayError::CacheIo {
            path: path.clone(),
            source: err,
        };
        fs::create_dir_all(&self.dir).map_err(io_err)?;
        let tmp = self.dir.join(format!("{hash}.json.tmp"));
        let body = serde_json::to_string_pretty(&entry).expect("cache entry serializes");
        fs::write(&tmp, body).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::request_hash;

    #[test]
    fn put_then_get_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path().to_path_buf());
        let req = ModelRequest::new("m", "s", "u", 64);
        let hash = request_hash(&req);
        cache.put(&hash, &req, "stored response").unwrap();
        let entry = cache.get(&hash).unwrap().unwrap();
        assert_eq!(entry.response, "stored response");
        assert_eq!(entry.request, req);
    }

    #[test]
    fn missing_entry_is_none() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path().to_path_buf());
        assert!(cache.get("deadbeef").unwrap().is_none());
    }
}
