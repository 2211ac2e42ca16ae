//! Optional JSON-lines result cache for spectral series evaluations,
//! keyed by (D, N, m, s, truncation, quadrature tolerance). A hit
//! replays the stored value bit-identically.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lfunc::{ErrorFlag, RealWithError};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheLine {
    d: i64,
    n: u64,
    m: u64,
    s: f64,
    truncation: u64,
    q_tol: f64,
    value: f64,
    abs_error: f64,
    flag: ErrorFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub d: i64,
    pub n: u64,
    pub m: u64,
    /// bit pattern of s, so the key is hashable and exact
    s_bits: u64,
    pub truncation: u64,
    q_tol_bits: u64,
}

impl CacheKey {
    pub fn new(d: i64, n: u64, m: u64, s: f64, truncation: u64, q_tol: f64) -> Self {
        CacheKey {
            d,
            n,
            m,
            s_bits: s.to_bits(),
            truncation,
            q_tol_bits: q_tol.to_bits(),
        }
    }

    fn s(&self) -> f64 {
        f64::from_bits(self.s_bits)
    }

    fn q_tol(&self) -> f64 {
        f64::from_bits(self.q_tol_bits)
    }
}

#[derive(Debug, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

/// File-backed spectral cache. Malformed lines are skipped on load;
/// inserts append one JSON object per line.
pub struct SpectralCache {
    path: PathBuf,
    inner: Mutex<CacheInner>,
}

#[derive(Debug)]
struct CacheInner {
    map: HashMap<CacheKey, RealWithError>,
    stats: CacheStats,
}

impl SpectralCache {
    pub fn open(path: &Path) -> Result<Self> {
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                if let Ok(entry) = serde_json::from_str::<CacheLine>(&line) {
                    map.insert(
                        CacheKey::new(
                            entry.d,
                            entry.n,
                            entry.m,
                            entry.s,
                            entry.truncation,
                            entry.q_tol,
                        ),
                        RealWithError::new(entry.value, entry.abs_error, entry.flag),
                    );
                }
            }
        }
        Ok(SpectralCache {
            path: path.to_path_buf(),
            inner: Mutex::new(CacheInner {
                map,
                stats: CacheStats::default(),
            }),
        })
    }

    pub fn get(&self, key: &CacheKey) -> Option<RealWithError> {
        let mut inner = self.inner.lock().unwrap();
        match inner.map.get(key).copied() {
            Some(v) => {
                inner.stats.hits += 1;
                Some(v)
            }
            None => {
                inner.stats.misses += 1;
                None
            }
        }
    }

    pub fn insert(&self, key: CacheKey, value: RealWithError) -> Result<()> {
        let line = serde_json::to_string(&CacheLine {
            d: key.d,
            n: key.n,
            m: key.m,
            s: key.s(),
            truncation: key.truncation,
            q_tol: key.q_tol(),
            value: value.value,
            abs_error: value.abs_error,
            flag: value.flag,
        })
        .expect("cache line serializes");
        let mut inner = self.inner.lock().unwrap();
        inner.map.insert(key, value);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        writeln!(file, "{line}")?;
        Ok(())
    }

    pub fn stats(&self) -> (u64, u64) {
        let inner = self.inner.lock().unwrap();
        (inner.stats.hits, inner.stats.misses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let key = CacheKey::new(-3, 7, 1, 1.5, 100_000, 1e-10);
        {
            let cache = SpectralCache::open(&path).unwrap();
            assert!(cache.get(&key).is_none());
            cache
                .insert(key, RealWithError::new(0.125, 1e-9, ErrorFlag::Heuristic))
                .unwrap();
        }
        let cache = SpectralCache::open(&path).unwrap();
        let v = cache.get(&key).unwrap();
        assert_eq!(v.value.to_bits(), 0.125f64.to_bits());
        assert_eq!(cache.stats(), (1, 0));
    }

    #[test]
    fn malformed_lines_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "not json\n{\"broken\":1}\n").unwrap();
        let cache = SpectralCache::open(&path).unwrap();
        assert!(cache
            .get(&CacheKey::new(-3, 7, 1, 1.5, 1000, 1e-10))
            .is_none());
    }
}
