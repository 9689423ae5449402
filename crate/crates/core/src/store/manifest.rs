use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HeightPolicy, StoreConfig, StoreError};
use crate::chunking::rolling;
use crate::{REF_SIZE, TAG_SIZE};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

/// Parameters a store was created with. Every chunk reference depends on
/// them, so a store refuses to open under different ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub scheme: String,
    pub chunk_size: u64,
    pub ref_size: usize,
    pub tag_size: usize,
    pub window: usize,
    pub min_chunk: Option<u64>,
    pub max_chunk: Option<u64>,
    pub height: HeightPolicy,
    pub suite: String,
    pub refcounted: bool,
    pub rolling_hash: RollingHashParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollingHashParams {
    pub multiplier: String,
    pub table_seed: String,
    pub criterion: String,
}

impl RollingHashParams {
    pub fn current() -> Self {
        Self {
            multiplier: format!("{:#018x}", rolling::MULTIPLIER),
            table_seed: format!("{:#018x}", rolling::TABLE_SEED),
            criterion: rolling::CRITERION.to_owned(),
        }
    }
}

impl Manifest {
    pub fn from_config(config: &StoreConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scheme: config.scheme.clone(),
            chunk_size: config.chunk_size,
            ref_size: REF_SIZE,
            tag_size: TAG_SIZE,
            window: config.window,
            min_chunk: config.min_chunk,
            max_chunk: config.max_chunk,
            height: config.height,
            suite: config.suite.clone(),
            refcounted: config.refcounted,
            rolling_hash: RollingHashParams::current(),
        }
    }

    pub fn to_config(&self) -> StoreConfig {
        StoreConfig {
            scheme: self.scheme.clone(),
            chunk_size: self.chunk_size,
            window: self.window,
            min_chunk: self.min_chunk,
            max_chunk: self.max_chunk,
            height: self.height,
            suite: self.suite.clone(),
            refcounted: self.refcounted,
        }
    }

    /// Reads `<dir>/manifest.json`, `Ok(None)` if absent.
    pub fn load(dir: &Path) -> Result<Option<Self>, StoreError> {
        match fs::read(dir.join(MANIFEST_FILE)) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| StoreError::Manifest(e.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(StoreError::Backend(e.into())),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir).map_err(|e| StoreError::Backend(e.into()))?;
        let json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), json).map_err(|e| StoreError::Backend(e.into()))
    }

    /// First field where `self` (stored) and `other` (configured) disagree.
    pub fn check(&self, other: &Manifest) -> Result<(), StoreError> {
        let fields: [(&str, String, String); 12] = [
            ("format_version", self.format_version.to_string(), other.format_version.to_string()),
            ("scheme", self.scheme.clone(), other.scheme.clone()),
            ("chunk_size", self.chunk_size.to_string(), other.chunk_size.to_string()),
            ("ref_size", self.ref_size.to_string(), other.ref_size.to_string()),
            ("tag_size", self.tag_size.to_string(), other.tag_size.to_string()),
            ("window", self.window.to_string(), other.window.to_string()),
            ("min_chunk", format!("{:?}", self.min_chunk), format!("{:?}", other.min_chunk)),
            ("max_chunk", format!("{:?}", self.max_chunk), format!("{:?}", other.max_chunk)),
            ("height", self.height.to_string(), other.height.to_string()),
            ("suite", self.suite.clone(), other.suite.clone()),
            ("refcounted", self.refcounted.to_string(), other.refcounted.to_string()),
            (
                "rolling_hash",
                format!("{:?}", self.rolling_hash),
                format!("{:?}", other.rolling_hash),
            ),
        ];
        for (field, stored, configured) in fields {
            if stored != configured {
                return Err(StoreError::ManifestMismatch {
                    field,
                    stored,
                    configured,
                });
            }
        }
        Ok(())
    }
}
