//! The content store: multi-level chunk trees persisted through a DAE scheme
//! into a key-value backend.
//!
//! Insertion chunks a content of `n` bytes into a tree of height
//! [`tree_height`]`(n)`. A node of height `h > 0` is chunked with target
//! length [`level_target`]`(h)` into children of height `h - 1`; leaves hold raw
//! bytes and inner nodes hold the concatenated 32-byte references of their
//! children. Each node is stored as `tag -> EncAuth(node)`, so identical
//! subtrees of different contents share storage.
//!
//! Retrieval walks the tree from the root, verifying every node before use.
//! Anything the backend does to stored elements surfaces as
//! [`StoreError::MissingChunk`], [`StoreError::Authenticity`] or
//! [`StoreError::MalformedSuperchunk`]; a wrong content is never returned.

mod key;
mod manifest;
mod tree;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

pub use key::{ContentKey, ParseKeyError, CONTENT_KEY_LEN};
pub use manifest::{Manifest, RollingHashParams, FORMAT_VERSION, MANIFEST_FILE};
pub use tree::{level_target, tree_height};

use crate::chunking::{
    split_at, validate_bounds, ChunkLimits, Chunker, ChunkerParams, ChunkingError,
};
use crate::crypto::{self, ChunkRef, CryptoError, Dae, MasterKey};
use crate::kvs::{self, BackendSpec, DirKvs, Kvs, KvsError, MemoryKvs, RefCounted, StorageReport};
use crate::REF_SIZE;

/// Name of the refcount sidecar inside a directory store.
pub const REFCOUNT_FILE: &str = "refcounts";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Chunking(#[from] ChunkingError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Backend(#[from] KvsError),
    #[error("chunk {chunk} (height {height}) is missing from the backend")]
    MissingChunk { chunk: ChunkRef, height: u8 },
    #[error("chunk {chunk} (height {height}) failed authentication")]
    Authenticity { chunk: ChunkRef, height: u8 },
    #[error("superchunk {chunk} has {len} bytes, not a multiple of the reference size")]
    MalformedSuperchunk { chunk: ChunkRef, len: usize },
    #[error("no content stored under {0}")]
    UnknownKey(ContentKey),
    #[error("reference count of chunk {chunk} would drop below zero")]
    Underflow { chunk: ChunkRef },
    #[error("store was opened without reference counting")]
    NotRefcounted,
    #[error("store manifest mismatch on `{field}`: stored {stored}, configured {configured}")]
    ManifestMismatch {
        field: &'static str,
        stored: String,
        configured: String,
    },
    #[error("unreadable store manifest: {0}")]
    Manifest(String),
}

/// How the height of a content's chunk tree is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum HeightPolicy {
    /// Logarithmic in the content length (see [`tree_height`]).
    #[default]
    Auto,
    /// Every content gets a tree of exactly this height. `Fixed(0)` stores
    /// whole contents; `Fixed(1)` is plain single-level chunking.
    Fixed(u8),
}

impl fmt::Display for HeightPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeightPolicy::Auto => f.write_str("auto"),
            HeightPolicy::Fixed(h) => write!(f, "{h}"),
        }
    }
}

impl FromStr for HeightPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(HeightPolicy::Auto),
            _ => s
                .parse()
                .map(HeightPolicy::Fixed)
                .map_err(|_| format!("height must be `auto` or 0..=255, got `{s}`")),
        }
    }
}

impl From<HeightPolicy> for String {
    fn from(h: HeightPolicy) -> String {
        h.to_string()
    }
}

impl TryFrom<String> for HeightPolicy {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Store parameters. `R` and `D` are fixed at 32 bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreConfig {
    /// Registered chunker name (`sc` or `cdc`).
    pub scheme: String,
    /// Target chunk size `S` in bytes.
    pub chunk_size: u64,
    /// Rolling-hash window for `cdc`.
    pub window: usize,
    /// Leaf-level length bounds; inner levels scale them with the target.
    pub min_chunk: Option<u64>,
    pub max_chunk: Option<u64>,
    pub height: HeightPolicy,
    /// Registered DAE suite name.
    pub suite: String,
    /// Maintain reference counts so contents can be deleted.
    pub refcounted: bool,
}

impl StoreConfig {
    pub fn new(scheme: impl Into<String>, chunk_size: u64, height: HeightPolicy) -> Self {
        Self {
            scheme: scheme.into(),
            chunk_size,
            window: crate::chunking::DEFAULT_WINDOW,
            min_chunk: None,
            max_chunk: None,
            height,
            suite: crypto::DEFAULT_SUITE.to_owned(),
            refcounted: false,
        }
    }

    /// Multi-level static chunking.
    pub fn ml_sc(chunk_size: u64) -> Self {
        Self::new("sc", chunk_size, HeightPolicy::Auto)
    }

    /// Multi-level content-defined chunking.
    pub fn ml_cdc(chunk_size: u64) -> Self {
        Self::new("cdc", chunk_size, HeightPolicy::Auto)
    }

    pub fn with_height(mut self, height: HeightPolicy) -> Self {
        self.height = height;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_bounds(mut self, min: Option<u64>, max: Option<u64>) -> Self {
        self.min_chunk = min;
        self.max_chunk = max;
        self
    }

    pub fn refcounted(mut self, yes: bool) -> Self {
        self.refcounted = yes;
        self
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.chunk_size < 2 * REF_SIZE as u64 {
            return Err(StoreError::Config(format!(
                "chunk size {} is below twice the reference size ({})",
                self.chunk_size,
                2 * REF_SIZE
            )));
        }
        validate_bounds(self.window, self.min_chunk, self.max_chunk)?;
        Ok(())
    }

    /// Height of the tree built for a content of `n` bytes.
    pub fn height_for(&self, n: u64) -> Result<u8, StoreError> {
        match self.height {
            HeightPolicy::Auto => tree_height(n, self.chunk_size, REF_SIZE as u64),
            HeightPolicy::Fixed(h) => Ok(h),
        }
    }

    /// Chunking limits applied to a node of height `h ≥ 1`.
    pub fn level_limits(&self, h: u8) -> Result<ChunkLimits, StoreError> {
        let (s, r) = (self.chunk_size, REF_SIZE as u64);
        Ok(ChunkLimits {
            target: level_target(h, s, r)?,
            min: self.min_chunk.map(|b| tree::scale_bound(b, h, s, r)).transpose()?,
            max: self.max_chunk.map(|b| tree::scale_bound(b, h, s, r)).transpose()?,
        })
    }
}

/// One node of a stored chunk tree, as seen by [`Store::describe_tree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub chunk: ChunkRef,
    pub height: u8,
    /// Offset of the represented bytes within the described content.
    pub offset: u64,
    /// Number of content bytes the node represents.
    pub length: u64,
    /// Stored value size (plaintext length).
    pub size: u64,
}

/// Per-height totals of a chunk tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub height: u8,
    pub nodes: u64,
    pub total_size: u64,
    pub total_length: u64,
}

/// Every node of one stored tree, grouped by height and ordered by offset.
#[derive(Debug, Clone)]
pub struct TreeDescription {
    pub key: ContentKey,
    levels: Vec<Vec<NodeInfo>>,
}

impl TreeDescription {
    /// Nodes at height `h`, in content order.
    pub fn level(&self, h: u8) -> &[NodeInfo] {
        self.levels.get(h as usize).map_or(&[], Vec::as_slice)
    }

    pub fn level_stats(&self) -> Vec<LevelStats> {
        self.levels
            .iter()
            .enumerate()
            .map(|(h, nodes)| LevelStats {
                height: h as u8,
                nodes: nodes.len() as u64,
                total_size: nodes.iter().map(|n| n.size).sum(),
                total_length: nodes.iter().map(|n| n.length).sum(),
            })
            .collect()
    }

    pub fn node_count(&self) -> u64 {
        self.levels.iter().map(|l| l.len() as u64).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeInfo> {
        self.levels.iter().flatten()
    }

    /// The height-`h` node whose represented bytes include `offset`.
    pub fn covering(&self, offset: u64, h: u8) -> Option<&NodeInfo> {
        let level = self.level(h);
        let idx = level.partition_point(|n| n.offset + n.length <= offset);
        level.get(idx).filter(|n| n.offset <= offset)
    }
}

/// A content store over a key-value backend.
pub struct Store {
    config: StoreConfig,
    chunker: Box<dyn Chunker>,
    dae: Box<dyn Dae>,
    backend: Box<dyn Kvs>,
}

impl fmt::Debug for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Store")
            .field("config", &self.config)
            .field("report", &self.backend.report())
            .finish_non_exhaustive()
    }
}

impl Store {
    /// Builds a store over `backend`. With `config.refcounted`, a backend
    /// without counters is wrapped in an in-memory [`RefCounted`].
    pub fn new(
        config: StoreConfig,
        key: &MasterKey,
        backend: Box<dyn Kvs>,
    ) -> Result<Self, StoreError> {
        config.validate()?;
        let chunker = crate::chunking::chunkers().build(
            &config.scheme,
            &ChunkerParams {
                window: config.window,
            },
        )?;
        if (config.min_chunk.is_some() || config.max_chunk.is_some()) && !chunker.supports_bounds()
        {
            return Err(StoreError::Config(format!(
                "scheme `{}` does not take min/max chunk lengths",
                config.scheme
            )));
        }
        let dae = crypto::suites().build(&config.suite, key)?;
        let mut backend = backend;
        if config.refcounted && backend.refcounts().is_none() {
            backend = Box::new(RefCounted::new(backend));
        }
        Ok(Self {
            config,
            chunker,
            dae,
            backend,
        })
    }

    /// Fresh in-memory store.
    pub fn in_memory(config: StoreConfig, key: &MasterKey) -> Result<Self, StoreError> {
        Self::new(config, key, Box::new(MemoryKvs::new()))
    }

    /// Opens the backend named by `spec`. Directory stores record `config` in a
    /// manifest on first use and refuse to open under a different one; their
    /// reference counts live in a sidecar file.
    pub fn open(config: StoreConfig, key: &MasterKey, spec: &BackendSpec) -> Result<Self, StoreError> {
        config.validate()?;
        let Some(dir) = spec.path() else {
            return Self::new(config, key, kvs::open_backend(spec)?);
        };
        let wanted = Manifest::from_config(&config);
        match Manifest::load(&dir)? {
            Some(stored) => stored.check(&wanted)?,
            None => wanted.save(&dir)?,
        }
        let objects = DirKvs::open(&dir)?;
        let backend: Box<dyn Kvs> = if config.refcounted {
            Box::new(RefCounted::with_sidecar(objects, dir.join(REFCOUNT_FILE))?)
        } else {
            Box::new(objects)
        };
        Self::new(config, key, backend)
    }

    /// Opens an existing directory store with the parameters in its manifest.
    pub fn open_dir(dir: impl Into<PathBuf>, key: &MasterKey) -> Result<Self, StoreError> {
        let dir = dir.into();
        let manifest = Manifest::load(&dir)?
            .ok_or_else(|| StoreError::Manifest(format!("no {MANIFEST_FILE} in {}", dir.display())))?;
        Self::open(manifest.to_config(), key, &BackendSpec::dir(dir))
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn report(&self) -> StorageReport {
        self.backend.report()
    }

    pub fn backend(&self) -> &dyn Kvs {
        self.backend.as_ref()
    }

    /// Direct access to the backend, bypassing all verification.
    pub fn backend_mut(&mut self) -> &mut dyn Kvs {
        self.backend.as_mut()
    }

    pub fn into_backend(self) -> Box<dyn Kvs> {
        self.backend
    }

    pub fn dae(&self) -> &dyn Dae {
        self.dae.as_ref()
    }

    /// Inserts `content` and returns its key. Inserting the same content again
    /// returns the same key and stores nothing new.
    pub fn put_content(&mut self, content: &[u8]) -> Result<ContentKey, StoreError> {
        let height = self.config.height_for(content.len() as u64)?;
        let root = self.put_chunk(content, height)?;
        self.backend.flush()?;
        Ok(ContentKey::new(root, height))
    }

    fn put_chunk(&mut self, chunk: &[u8], height: u8) -> Result<ChunkRef, StoreError> {
        let tag = if height == 0 {
            let (ct, tag) = self.dae.enc_auth(chunk);
            self.backend.put(tag.as_ref(), &ct)?;
            tag
        } else {
            let limits = self.config.level_limits(height)?;
            let cuts = self.chunker.cut_points(chunk, &limits);
            let mut children = Vec::with_capacity((cuts.len() + 1) * REF_SIZE);
            for child in split_at(chunk, &cuts) {
                children.extend_from_slice(self.put_chunk(child, height - 1)?.as_ref());
            }
            let (ct, tag) = self.dae.enc_auth(&children);
            if !self.backend.contains(tag.as_ref())? {
                self.backend.put(tag.as_ref(), &ct)?;
            }
            tag
        };
        if let Some(rc) = self.backend.refcounts() {
            rc.refcount_incr(tag.as_ref())?;
        }
        Ok(tag)
    }

    /// Retrieves the content stored under `key`, verifying every node.
    ///
    /// Any node of a stored tree can be passed as a key together with its own
    /// height; the result is the byte range that node represents.
    pub fn get_content(&self, key: &ContentKey) -> Result<Vec<u8>, StoreError> {
        let mut out = Vec::new();
        self.get_chunk(&key.root, key.height, &mut out)?;
        Ok(out)
    }

    fn fetch(&self, chunk: &ChunkRef, height: u8) -> Result<Vec<u8>, StoreError> {
        let ct = self
            .backend
            .get(chunk.as_ref())?
            .ok_or(StoreError::MissingChunk {
                chunk: *chunk,
                height,
            })?;
        let pt = self
            .dae
            .dec_vrfy(&ct, chunk)
            .map_err(|_| StoreError::Authenticity {
                chunk: *chunk,
                height,
            })?;
        if height > 0 && pt.len() % REF_SIZE != 0 {
            return Err(StoreError::MalformedSuperchunk {
                chunk: *chunk,
                len: pt.len(),
            });
        }
        Ok(pt)
    }

    fn get_chunk(&self, chunk: &ChunkRef, height: u8, out: &mut Vec<u8>) -> Result<(), StoreError> {
        let pt = self.fetch(chunk, height)?;
        if height == 0 {
            out.extend_from_slice(&pt);
            return Ok(());
        }
        for child in children(&pt) {
            self.get_chunk(&child, height - 1, out)?;
        }
        Ok(())
    }

    /// Removes one insertion of the content under `key`. Chunks still used by
    /// other contents (or other insertions) survive.
    pub fn delete_content(&mut self, key: &ContentKey) -> Result<(), StoreError> {
        if !self.config.refcounted || self.backend.refcounts().is_none() {
            return Err(StoreError::NotRefcounted);
        }
        let mut visits = Vec::new();
        match self.collect(&key.root, key.height, &mut visits) {
            Err(StoreError::MissingChunk { chunk, .. }) if chunk == key.root => {
                return Err(StoreError::UnknownKey(*key))
            }
            other => other?,
        }
        let mut needed: HashMap<ChunkRef, u64> = HashMap::new();
        for chunk in &visits {
            *needed.entry(*chunk).or_default() += 1;
        }
        let rc = self.backend.refcounts().expect("checked above");
        for (chunk, &n) in &needed {
            if rc.refcount(chunk.as_ref()) < n {
                return Err(StoreError::Underflow { chunk: *chunk });
            }
        }
        for chunk in &visits {
            rc.refcount_decr(chunk.as_ref())?;
        }
        self.backend.flush()?;
        Ok(())
    }

    /// Verifies the tree under `chunk` and records every node visit.
    fn collect(
        &self,
        chunk: &ChunkRef,
        height: u8,
        visits: &mut Vec<ChunkRef>,
    ) -> Result<(), StoreError> {
        let pt = self.fetch(chunk, height)?;
        visits.push(*chunk);
        if height > 0 {
            for child in children(&pt) {
                self.collect(&child, height - 1, visits)?;
            }
        }
        Ok(())
    }

    /// Per-node layout of the tree under `key`.
    pub fn describe_tree(&self, key: &ContentKey) -> Result<TreeDescription, StoreError> {
        let mut levels = vec![Vec::new(); key.height as usize + 1];
        self.describe(&key.root, key.height, 0, &mut levels)?;
        Ok(TreeDescription { key: *key, levels })
    }

    fn describe(
        &self,
        chunk: &ChunkRef,
        height: u8,
        offset: u64,
        levels: &mut [Vec<NodeInfo>],
    ) -> Result<u64, StoreError> {
        let pt = self.fetch(chunk, height)?;
        let slot = levels[height as usize].len();
        levels[height as usize].push(NodeInfo {
            chunk: *chunk,
            height,
            offset,
            length: 0,
            size: pt.len() as u64,
        });
        let length = if height == 0 {
            pt.len() as u64
        } else {
            let mut length = 0;
            for child in children(&pt) {
                length += self.describe(&child, height - 1, offset + length, levels)?;
            }
            length
        };
        levels[height as usize][slot].length = length;
        Ok(length)
    }
}

fn children(superchunk: &[u8]) -> impl Iterator<Item = ChunkRef> + '_ {
    superchunk
        .chunks_exact(REF_SIZE)
        .map(|c| ChunkRef::from_slice(c).expect("exact chunk"))
}
