//! Content-addressed JSON cache for expensive solves.
//!
//! Keys are SHA-256 hashes of a canonical serialization of all producer
//! inputs. Corrupted entries are recomputed and overwritten; an unwritable
//! cache directory degrades to pass-through with a warning flag.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Content hash of any serializable input bundle.
pub fn content_key<I: Serialize>(inputs: &I) -> Result<String> {
    let bytes = serde_json::to_vec(inputs)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    Ok(out)
}

/// A directory-backed cache. `None` directory means caching is disabled.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
    /// Set when the directory could not be created or written.
    pub degraded: bool,
}

impl Cache {
    /// Open (creating if necessary) a cache at `dir`. Falls back to
    /// pass-through when the directory cannot be used.
    pub fn open(dir: &Path) -> Cache {
        match std::fs::create_dir_all(dir) {
            Ok(()) => {
                // probe writability
                let probe = dir.join(".write-probe");
                let ok = std::fs::write(&probe, b"ok").is_ok();
                let _ = std::fs::remove_file(&probe);
                if ok {
                    Cache {
                        dir: Some(dir.to_path_buf()),
                        degraded: false,
                    }
                } else {
                    Cache {
                        dir: None,
                        degraded: true,
                    }
                }
            }
            Err(_) => Cache {
                dir: None,
                degraded: true,
            },
        }
    }

    /// A cache that never stores anything.
    pub fn disabled() -> Cache {
        Cache {
            dir: None,
            degraded: false,
        }
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    /// Look up `key`; on miss (or corrupted entry) run `producer`, store,
    /// and return the fresh value together with a hit flag.
    pub fn get_or_compute<V, F>(&self, key: &str, producer: F) -> Result<(V, bool)>
    where
        V: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<V>,
    {
        if let Some(path) = self.path_for(key) {
            if let Ok(bytes) = std::fs::read(&path) {
                if let Ok(value) = serde_json::from_slice::<V>(&bytes) {
                    return Ok((value, true));
                }
                // corrupted entry: fall through and recompute
            }
        }
        let value = producer()?;
        if let Some(path) = self.path_for(key) {
            let tmp = path.with_extension("json.tmp");
            if std::fs::write(&tmp, serde_json::to_vec(&value)?).is_ok() {
                let _ = std::fs::rename(&tmp, &path);
            }
        }
        Ok((value, false))
    }
}
