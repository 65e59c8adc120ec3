use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::record::{simulate_mode, ModeRecord, ENGINE_VERSION};
use crate::error::Result;
use crate::fdtd::RingdownConfig;
use crate::field::PlaneField;
use crate::geometry::CavityDesign;

/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "H1CAV_CACHE_DIR";

const RECORD_FILE: &str = "record.json";
const TOP_FILE: &str = "plane_top.bin";
const MID_FILE: &str = "midplane.bin";

#[derive(Serialize)]
struct KeyMaterial<'a> {
    engine: &'a str,
    design: &'a CavityDesign,
    config: &'a RingdownConfig,
}

/// Content-addressed store of ring-down records.
///
/// Entries live in `<root>/<sha256>/` where the hash covers the design, the
/// ring-down settings (resolution and polarization included) and the engine
/// version. Thread counts do not enter the key since they do not change
/// results.
#[derive(Debug, Clone)]
pub struct ResultCache {
    root: PathBuf,
}

impl ResultCache {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(ResultCache { root })
    }

    /// The cache named by `H1CAV_CACHE_DIR`, if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Ok(Some(Self::new(PathBuf::from(dir))?)),
            _ => Ok(None),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn key(design: &CavityDesign, config: &RingdownConfig) -> String {
        let config = RingdownConfig { threads: None, ..config.clone() };
        let material = KeyMaterial { engine: ENGINE_VERSION, design, config: &config };
        let bytes = serde_json::to_vec(&material).expect("key material serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn entry(&self, key: &str) -> PathBuf {
        self.root.join(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entry(key).join(RECORD_FILE).is_file()
    }

    /// The stored record, or `None` when absent or unreadable (a damaged
    /// entry is treated as a miss and will be overwritten).
    pub fn load(&self, key: &str) -> Option<ModeRecord> {
        let dir = self.entry(key);
        if !dir.join(RECORD_FILE).is_file() {
            return None;
        }
        let read = || -> Result<ModeRecord> {
            let text = fs::read(dir.join(RECORD_FILE))?;
            let mut record: ModeRecord = serde_json::from_slice(&text)?;
            record.plane_top = PlaneField::read(&dir.join(TOP_FILE))?;
            record.midplane = PlaneField::read(&dir.join(MID_FILE))?;
            Ok(record)
        };
        match read() {
            Ok(r) if r.engine == ENGINE_VERSION => Some(r),
            Ok(_) => None,
            Err(e) => {
                warn!("ignoring damaged cache entry {}: {e}", dir.display());
                None
            }
        }
    }

    /// Write an entry atomically: files go to a scratch directory that is
    /// renamed into place, so readers never see a partial entry.
    pub fn store(&self, key: &str, record: &ModeRecord) -> Result<()> {
        let scratch = self.root.join(format!(".{key}.{}.tmp", std::process::id()));
        if scratch.exists() {
            fs::remove_dir_all(&scratch)?;
        }
        fs::create_dir_all(&scratch)?;
        fs::write(scratch.join(RECORD_FILE), serde_json::to_vec(record)?)?;
        record.plane_top.write(&scratch.join(TOP_FILE))?;
        record.midplane.write(&scratch.join(MID_FILE))?;
        let dest = self.entry(key);
        if dest.exists() {
            fs::remove_dir_all(&dest)?;
        }
        fs::rename(&scratch, &dest)?;
        Ok(())
    }

    /// Cached record for the design, running the ring-down on a miss.
    /// The flag tells whether the FDTD solver ran.
    pub fn get_or_run(&self, design: &CavityDesign, config: &RingdownConfig) -> Result<(ModeRecord, bool)> {
        let key = Self::key(design, config);
        if let Some(r) = self.load(&key) {
            debug!("cache hit {key}");
            return Ok((r, false));
        }
        let (record, _) = simulate_mode(design, config)?;
        self.store(&key, &record)?;
        Ok((record, true))
    }
}

/// Record for the design from the cache when given, else from a fresh run.
pub fn obtain(cache: Option<&ResultCache>, design: &CavityDesign, config: &RingdownConfig) -> Result<(ModeRecord, bool)> {
    match cache {
        Some(c) => c.get_or_run(design, config),
        None => simulate_mode(design, config).map(|(r, _)| (r, true)),
    }
}
