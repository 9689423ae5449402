//! Single-level chunking schemes.
//!
//! A chunker maps a byte string and a target length to a list of cut points;
//! it must be deterministic. Two are built in and registered by name:
//!
//! * `sc`: static chunking, a cut every `target` bytes.
//! * `cdc`: content-defined chunking with a Karp-Rabin rolling hash over a
//!   sliding window (see [`rolling`]).
//!
//! A cut point `c` ends the chunk `content[prev..c]`; cut points are strictly
//! increasing and lie in `(0, len)`.

mod fixed;
pub mod rolling;

pub use fixed::StaticChunker;
pub use rolling::{CdcChunker, RollingHash};

use crate::registry::{Registry, UnknownStrategy};

/// Default CDC window in bytes.
pub const DEFAULT_WINDOW: usize = 48;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChunkingError {
    #[error("target chunk length must be at least 1")]
    ZeroTarget,
    #[error("window must be at least 1 byte")]
    ZeroWindow,
    #[error("min chunk length {min} exceeds max chunk length {max}")]
    MinAboveMax { min: u64, max: u64 },
    #[error("min/max chunk lengths must be positive")]
    ZeroBound,
    #[error(transparent)]
    Unknown(#[from] UnknownStrategy),
}

/// Per-call length constraints for a chunker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkLimits {
    /// Target (expected) chunk length.
    pub target: u64,
    /// Suppress cuts closer than this to the previous cut.
    pub min: Option<u64>,
    /// Force a cut once a chunk reaches this length.
    pub max: Option<u64>,
}

impl ChunkLimits {
    pub fn target(target: u64) -> Self {
        Self {
            target,
            min: None,
            max: None,
        }
    }
}

/// A deterministic single-level chunking scheme.
pub trait Chunker: Send + Sync {
    fn name(&self) -> &'static str;

    /// Cut points of `content` for the given limits.
    fn cut_points(&self, content: &[u8], limits: &ChunkLimits) -> Vec<usize>;

    /// Whether this scheme honours `min`/`max` limits.
    fn supports_bounds(&self) -> bool {
        false
    }
}

/// Construction parameters shared by all chunkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkerParams {
    pub window: usize,
}

impl Default for ChunkerParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
        }
    }
}

pub type ChunkerRegistry = Registry<ChunkerParams, dyn Chunker, ChunkingError>;

/// Registry holding `sc` and `cdc`.
pub fn chunkers() -> ChunkerRegistry {
    let mut reg = ChunkerRegistry::new("chunking scheme");
    reg.register(StaticChunker::NAME, |_| Ok(Box::new(StaticChunker)));
    reg.register(CdcChunker::NAME, |p| Ok(Box::new(CdcChunker::new(p.window)?)));
    reg
}

/// A complete standalone chunking configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkerSpec {
    pub scheme: String,
    pub target: u64,
    pub window: usize,
    pub min_length: Option<u64>,
    pub max_length: Option<u64>,
}

impl ChunkerSpec {
    pub fn new(scheme: impl Into<String>, target: u64) -> Self {
        Self {
            scheme: scheme.into(),
            target,
            window: DEFAULT_WINDOW,
            min_length: None,
            max_length: None,
        }
    }

    pub fn sc(target: u64) -> Self {
        Self::new(StaticChunker::NAME, target)
    }

    pub fn cdc(target: u64) -> Self {
        Self::new(CdcChunker::NAME, target)
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_bounds(mut self, min: Option<u64>, max: Option<u64>) -> Self {
        self.min_length = min;
        self.max_length = max;
        self
    }

    pub fn validate(&self) -> Result<(), ChunkingError> {
        if self.target == 0 {
            return Err(ChunkingError::ZeroTarget);
        }
        validate_bounds(self.window, self.min_length, self.max_length)
    }

    pub fn limits(&self) -> ChunkLimits {
        ChunkLimits {
            target: self.target,
            min: self.min_length,
            max: self.max_length,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Chunker>, ChunkingError> {
        self.validate()?;
        chunkers().build(
            &self.scheme,
            &ChunkerParams {
                window: self.window,
            },
        )
    }
}

pub(crate) fn validate_bounds(
    window: usize,
    min: Option<u64>,
    max: Option<u64>,
) -> Result<(), ChunkingError> {
    if window == 0 {
        return Err(ChunkingError::ZeroWindow);
    }
    if min == Some(0) || max == Some(0) {
        return Err(ChunkingError::ZeroBound);
    }
    if let (Some(min), Some(max)) = (min, max) {
        if min > max {
            return Err(ChunkingError::MinAboveMax { min, max });
        }
    }
    Ok(())
}

/// Cut points of `content` under `spec`.
pub fn boundaries(spec: &ChunkerSpec, content: &[u8]) -> Result<Vec<usize>, ChunkingError> {
    Ok(spec.build()?.cut_points(content, &spec.limits()))
}

/// Chunks of `content` under `spec`. Empty content yields one empty chunk.
pub fn split<'a>(spec: &ChunkerSpec, content: &'a [u8]) -> Result<Vec<&'a [u8]>, ChunkingError> {
    Ok(split_at(content, &boundaries(spec, content)?))
}

/// Splits `content` at the given cut points.
pub fn split_at<'a>(content: &'a [u8], cuts: &[usize]) -> Vec<&'a [u8]> {
    let mut chunks = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for &cut in cuts {
        chunks.push(&content[start..cut]);
        start = cut;
    }
    chunks.push(&content[start..]);
    chunks
}
