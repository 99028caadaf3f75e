//! On-disk cache of exact `ξ` spectra.
//!
//! Each `(D, μ, N, n, l, boundary)` spectrum is stored in its own file named
//! after a SHA-256 key that also covers the crate version, so upgrades never
//! reuse stale records. Files are written to a temporary name and renamed
//! into place, which keeps concurrent runs sharing a directory safe.
//!
//! Record layout (little endian):
//!
//! ```text
//! magic "RADENTXI" | format u32 | key [u8; 32] | created_at u64 (unix s)
//! | len u64 | len × f64 | sha256 of everything before [u8; 32]
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::entanglement::{ExactModes, ModeSource};
use crate::error::{Error, Result};
use crate::lattice::ModelParams;
use crate::reduction::Partition;

pub const MAGIC: &[u8; 8] = b"RADENTXI";
pub const FORMAT_VERSION: u32 = 1;

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "RADENT_CACHE_DIR";

const HEADER_LEN: usize = 8 + 4 + 32 + 8 + 8;
const CHECKSUM_LEN: usize = 32;

pub type CacheKey = [u8; 32];

#[derive(Debug, Clone, PartialEq)]
pub struct ModeCacheRecord {
    pub key: CacheKey,
    pub xi: Vec<f64>,
    pub created_at: u64,
}

/// Content hash identifying one spectrum under a given code version.
pub fn cache_key(
    params: &ModelParams,
    traced_sites: usize,
    l: usize,
    code_version: &str,
) -> CacheKey {
    let mut h = Sha256::new();
    h.update(b"radent-xi\0");
    h.update(params.dim.to_bits().to_le_bytes());
    h.update(params.mass.to_bits().to_le_bytes());
    h.update((params.sites as u64).to_le_bytes());
    h.update((traced_sites as u64).to_le_bytes());
    h.update((l as u64).to_le_bytes());
    h.update(params.boundary.as_str().as_bytes());
    h.update(b"\0");
    h.update(code_version.as_bytes());
    h.finalize().into()
}

impl ModeCacheRecord {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.xi.len() + CHECKSUM_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.key);
        out.extend_from_slice(&self.created_at.to_le_bytes());
        out.extend_from_slice(&(self.xi.len() as u64).to_le_bytes());
        for x in &self.xi {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let sum: [u8; 32] = Sha256::digest(&out).into();
        out.extend_from_slice(&sum);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("cache record: {what}"));
        if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
            return Err(bad("truncated"));
        }
        let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != sum {
            return Err(bad("checksum mismatch"));
        }
        if &body[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(body[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(body[i..i + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(bad(&format!("format version {version}")));
        }
        let key: CacheKey = body[12..44].try_into().unwrap();
        let created_at = u64_at(44);
        let len = u64_at(52) as usize;
        if body.len() != HEADER_LEN + 8 * len {
            return Err(bad("length mismatch"));
        }
        let xi = (0..len)
            .map(|i| {
                f64::from_le_bytes(
                    body[HEADER_LEN + 8 * i..HEADER_LEN + 8 * i + 8]
                        .try_into()
                        .unwrap(),
                )
            })
            .collect();
        Ok(ModeCacheRecord {
            key,
            xi,
            created_at,
        })
    }
}

fn hex(key: &CacheKey) -> String {
    key.iter().map(|b| format!("{b:02x}")).collect()
}

/// A [`ModeSource`] that reads spectra from disk and computes only misses.
#[derive(Debug)]
pub struct ModeCache {
    dir: PathBuf,
    code_version: String,
    inner: ExactModes,
    hits: AtomicUsize,
    discarded: AtomicUsize,
    temp_counter: AtomicUsize,
}

impl ModeCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Self::with_version(dir, env!("CARGO_PKG_VERSION"))
    }

    /// Cache tagged with an explicit code version instead of the crate's.
    pub fn with_version(dir: impl AsRef<Path>, code_version: &str) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(ModeCache {
            dir,
            code_version: code_version.to_string(),
            inner: ExactModes::new(),
            hits: AtomicUsize::new(0),
            discarded: AtomicUsize::new(0),
            temp_counter: AtomicUsize::new(0),
        })
    }

    /// Opens the directory named by [`CACHE_DIR_ENV`], if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::open(dir).map(Some),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Reductions actually performed (cache misses).
    pub fn reductions(&self) -> usize {
        self.inner.reductions()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    /// Records rejected as corrupt or mismatched.
    pub fn discarded(&self) -> usize {
        self.discarded.load(Ordering::Relaxed)
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.xi", hex(key)))
    }

    fn load(&self, key: &CacheKey) -> Option<Vec<f64>> {
        let path = self.path_for(key);
        let bytes = fs::read(&path).ok()?;
        match ModeCacheRecord::decode(&bytes) {
            Ok(rec) if &rec.key == key => Some(rec.xi),
            Ok(_) => {
                log::warn!(
                    "cache record {} has a foreign key; recomputing",
                    path.display()
                );
                self.discarded.fetch_add(1, Ordering::Relaxed);
                None
            }
            Err(e) => {
                log::warn!("discarding {}: {e}; recomputing", path.display());
                self.discarded.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    fn store(&self, key: &CacheKey, xi: &[f64]) -> Result<()> {
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let rec = ModeCacheRecord {
            key: *key,
            xi: xi.to_vec(),
            created_at,
        };
        let target = self.path_for(key);
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            hex(key),
            std::process::id(),
            self.temp_counter.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&rec.encode())?;
        f.sync_all()?;
        drop(f);
        fs::rename(&tmp, &target)?;
        Ok(())
    }
}

impl ModeSource for ModeCache {
    fn spectra(
        &self,
        params: &ModelParams,
        l: usize,
        partitions: &[Partition],
    ) -> Result<Vec<Vec<f64>>> {
        let keys: Vec<CacheKey> = partitions
            .iter()
            .map(|p| cache_key(params, p.traced_sites(), l, &self.code_version))
            .collect();
        let mut out: Vec<Option<Vec<f64>>> = keys.iter().map(|k| self.load(k)).collect();
        let missing: Vec<usize> = (0..out.len()).filter(|&i| out[i].is_none()).collect();
        self.hits
            .fetch_add(out.len() - missing.len(), Ordering::Relaxed);
        if !missing.is_empty() {
            let cuts: Vec<Partition> = missing.iter().map(|&i| partitions[i]).collect();
            let fresh = self.inner.spectra(params, l, &cuts)?;
            for (&i, xi) in missing.iter().zip(fresh) {
                self.store(&keys[i], &xi)?;
                out[i] = Some(xi);
            }
        }
        Ok(out.into_iter().map(|x| x.expect("filled above")).collect())
    }
}
