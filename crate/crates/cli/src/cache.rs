//! Content-addressed result cache.
//!
//! Each entry is one file `<key>.json` holding the payload text and its
//! SHA-256. A read whose stored hash does not match the payload (or that
//! cannot be parsed at all) is logged and treated as a miss.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bumped whenever a numerical change would make old blobs stale.
pub const VERSION_TAG: &str = concat!("heisenlab-", env!("CARGO_PKG_VERSION"), "-r1");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Key over a serializable description of the computation plus the version tag.
pub fn cache_key<T: Serialize>(what: &T) -> String {
    let desc = serde_json::to_string(&(VERSION_TAG, what)).expect("cache key description serializes");
    sha256_hex(desc.as_bytes())
}

#[derive(Serialize, Deserialize)]
struct Entry {
    sha256: String,
    payload: String,
}

pub struct Cache {
    dir: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()), hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    /// Every lookup misses and nothing is written.
    pub fn disabled() -> Self {
        Cache { dir: None, hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    pub fn is_enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let hit = self.path(key).and_then(|p| read_entry(&p));
        match hit {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        hit
    }

    pub fn put(&self, key: &str, payload: &str) {
        let Some(path) = self.path(key) else { return };
        let entry = Entry { sha256: sha256_hex(payload.as_bytes()), payload: payload.to_string() };
        let text = serde_json::to_string(&entry).expect("cache entry serializes");
        // write-then-rename so a concurrent reader never sees half a file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let res = std::fs::create_dir_all(path.parent().unwrap())
            .and_then(|_| std::fs::write(&tmp, text))
            .and_then(|_| std::fs::rename(&tmp, &path));
        if let Err(e) = res {
            log::warn!("cache write {} failed: {e}", path.display());
        }
    }

    /// Typed lookup: a payload that no longer deserializes counts as a miss.
    pub fn get_or_compute<T, E>(&self, key: &str, compute: impl FnOnce() -> Result<T, E>) -> Result<T, E>
    where
        T: Serialize + for<'de> Deserialize<'de>,
    {
        if let Some(text) = self.get(key) {
            match serde_json::from_str(&text) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::warn!("cache entry {key} unreadable ({e}); recomputing");
                    self.hits.fetch_sub(1, Ordering::Relaxed);
                    self.misses.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
        let v = compute()?;
        if self.is_enabled() {
            match serde_json::to_string(&v) {
                Ok(text) => self.put(key, &text),
                Err(e) => log::warn!("cache entry {key} not stored: {e}"),
            }
        }
        Ok(v)
    }
}

fn read_entry(path: &Path) -> Option<String> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
        Err(e) => {
            log::warn!("cache read {} failed: {e}; treating as miss", path.display());
            return None;
        }
    };
    let entry: Entry = match serde_json::from_str(&text) {
        Ok(e) => e,
        Err(e) => {
            log::warn!("cache entry {} corrupt ({e}); treating as miss", path.display());
            return None;
        }
    };
    if sha256_hex(entry.payload.as_bytes()) != entry.sha256 {
        log::warn!("cache entry {} fails its hash check; treating as miss", path.display());
        return None;
    }
    Some(entry.payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_then_get_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let key = cache_key(&("fam", [64, 128], "inf", 2));
        assert_eq!(c.get(&key), None);
        c.put(&key, "{\"x\":0.1}");
        assert_eq!(c.get(&key).as_deref(), Some("{\"x\":0.1}"));
        assert_eq!((c.hits(), c.misses()), (1, 1));
    }

    #[test]
    fn keys_depend_on_inputs() {
        assert_ne!(cache_key(&("fam", [64, 128])), cache_key(&("fam", [64, 256])));
        assert_eq!(cache_key(&("fam", [64, 128])), cache_key(&("fam", [64, 128])));
    }

    #[test]
    fn tampered_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        c.put("k", "payload");
        let p = dir.path().join("k.json");
        let text = std::fs::read_to_string(&p).unwrap().replace("payload", "pay1oad");
        std::fs::write(&p, text).unwrap();
        assert_eq!(c.get("k"), None);
        std::fs::write(&p, "not json").unwrap();
        assert_eq!(c.get("k"), None);
    }

    #[test]
    fn disabled_always_misses() {
        let c = Cache::disabled();
        c.put("k", "v");
        assert_eq!(c.get("k"), None);
        let v: Result<u32, ()> = c.get_or_compute("k", || Ok(3));
        assert_eq!(v, Ok(3));
    }
}
