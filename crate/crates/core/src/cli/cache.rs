//! On-disk cache of per-point results.
//!
//! Entries are keyed by the SHA-256 of a canonical JSON description that
//! includes the tool version, and store `f64` bit patterns so hits are
//! bit-identical. Writers go through a temporary file and an atomic rename;
//! entries that fail to parse or whose key does not match are deleted.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CACHE_ENV: &str = "OSELEDETS_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    bits: Vec<u64>,
}

#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    version: String,
    hits: AtomicU64,
    misses: AtomicU64,
}

/// `$OSELEDETS_CACHE_DIR`, else the user cache directory.
pub fn default_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(d).join("oseledets");
    }
    if let Some(h) = std::env::var_os("HOME") {
        return PathBuf::from(h).join(".cache").join("oseledets");
    }
    std::env::temp_dir().join("oseledets-cache")
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        Self::with_version(dir, VERSION)
    }

    pub fn with_version(dir: impl Into<PathBuf>, version: &str) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, version: version.into(), hits: AtomicU64::new(0), misses: AtomicU64::new(0) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// Hex digest of `{"version": ..., "key": parts}`.
    pub fn key(&self, parts: &Value) -> String {
        // serde_json maps are ordered, so the encoding is canonical
        let doc = json!({ "version": self.version, "key": parts });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<Vec<f64>> {
        let path = self.path(key);
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice::<Entry>(&bytes) {
            Ok(e) if e.key == key => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(e.bits.into_iter().map(f64::from_bits).collect())
            }
            _ => {
                let _ = fs::remove_file(&path);
                None
            }
        }
    }

    pub fn put(&self, key: &str, values: &[f64]) -> std::io::Result<()> {
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let entry = Entry { key: key.into(), bits: values.iter().map(|v| v.to_bits()).collect() };
        let tmp = self.dir.join(format!(".{key}.{}.{}.tmp", std::process::id(), COUNTER.fetch_add(1, Ordering::Relaxed)));
        fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        fs::rename(&tmp, self.path(key)).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }

    /// Cached value for `parts`, computing and storing it on a miss. Write
    /// failures only cost the next run a recomputation.
    pub fn get_or_compute<E>(&self, parts: &Value, compute: impl FnOnce() -> Result<Vec<f64>, E>) -> Result<Vec<f64>, E> {
        let key = self.key(parts);
        if let Some(v) = self.get(&key) {
            return Ok(v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = compute()?;
        let _ = self.put(&key, &v);
        Ok(v)
    }
}

/// Runs `compute` through the cache when one is given.
pub fn cached<E>(cache: Option<&Cache>, parts: Value, compute: impl FnOnce() -> Result<Vec<f64>, E>) -> Result<Vec<f64>, E> {
    match cache {
        Some(c) => c.get_or_compute(&parts, compute),
        None => compute(),
    }
}

/// Hex bit patterns, for exact floats inside cache keys.
pub fn bits_key(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|v| json!(format!("{:016x}", v.to_bits()))).collect())
}
