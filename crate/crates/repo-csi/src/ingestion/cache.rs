//! Disk cache for raw endpoint responses. Entries are the exact body bytes,
//! keyed by (endpoint, params, window bounds), fresh while their mtime is
//! within the TTL. Writes go through a temp file + rename so readers never
//! observe a partial entry.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachePolicy {
    pub ttl: Duration,
    pub cache_dir: PathBuf,
}

impl Default for CachePolicy {
    fn default() -> Self {
        CachePolicy {
            ttl: Duration::from_secs(24 * 3600),
            cache_dir: default_cache_dir(),
        }
    }
}

impl CachePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.ttl.is_zero() {
            return Err(Error::InvalidConfig {
                detail: "cache ttl must be positive".into(),
            });
        }
        Ok(())
    }
}

/// `$XDG_CACHE_HOME/repo-csi`, falling back to `~/.cache/repo-csi`, falling
/// back to `.repo-csi-cache` in the working directory.
pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(dir).join("repo-csi");
    }
    if let Some(home) = std::env::var_os("HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(home).join(".cache").join("repo-csi");
    }
    PathBuf::from(".repo-csi-cache")
}

fn fnv1a64(seed: u64, bytes: &[u8]) -> u64 {
    let mut hash = seed;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

const FNV_OFFSET_BASIS: u64 = 0xCBF2_9CE4_8422_2325;

/// Filename for a key: two independently-seeded FNV-1a hashes (128 bits
/// total). Collision-resistance is not the goal, only a stable name.
pub(crate) fn cache_file_name(key: &str) -> String {
    let a = fnv1a64(FNV_OFFSET_BASIS, key.as_bytes());
    let b = fnv1a64(FNV_OFFSET_BASIS ^ 0x5151_5151_5151_5151, key.as_bytes());
    format!("{a:016x}{b:016x}.json")
}

pub(crate) struct DiskCache<'a> {
    policy: &'a CachePolicy,
}

impl<'a> DiskCache<'a> {
    pub fn new(policy: &'a CachePolicy) -> Self {
        DiskCache { policy }
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.policy.cache_dir.join(cache_file_name(key))
    }

    /// Body bytes for a fresh entry; None on miss or expiry. A future mtime
    /// (clock skew) counts as fresh.
    pub fn lookup(&self, key: &str) -> Option<Vec<u8>> {
        let path = self.path_for(key);
        let modified = fs::metadata(&path).ok()?.modified().ok()?;
        let fresh = match modified.elapsed() {
            Ok(age) => age < self.policy.ttl,
            Err(_) => true,
        };
        if !fresh {
            return None;
        }
        fs::read(&path).ok()
    }

    pub fn store(&self, key: &str, body: &[u8]) -> std::io::Result<()> {
        fs::create_dir_all(&self.policy.cache_dir)?;
        let path = self.path_for(key);
        let tmp = tmp_sibling(&path);
        fs::write(&tmp, body)?;
        match fs::rename(&tmp, &path) {
            Ok(()) => Ok(()),
            Err(e) => {
                let _ = fs::remove_file(&tmp);
                Err(e)
            }
        }
    }
}

fn tmp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}
