//! Closed-form storage cost estimates for chunk-tree stores.
//!
//! All functions are real-valued upper bounds on *expected* storage costs in
//! bytes, under uniformly random content. Symbols: `n` content length, `s`
//! target chunk size, `r` reference size, `d` tag size, `w` CDC window, `h`
//! tree height and `delta` the length of a modified byte range.

use crate::store::tree_height;
use crate::{REF_SIZE, TAG_SIZE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("delta must be at least 2 for the general bound, got {0}")]
    DeltaTooSmall(u64),
    #[error("chunk size must exceed reference size")]
    ChunkSize,
}

/// Underlying single-level scheme of a multi-level store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseScheme {
    Static,
    ContentDefined,
}

impl BaseScheme {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sc" => Some(Self::Static),
            "cdc" => Some(Self::ContentDefined),
            _ => None,
        }
    }
}

/// Parameter set shared by the composite estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub chunk_size: u64,
    pub ref_size: u64,
    pub tag_size: u64,
    pub window: u64,
}

impl ModelParams {
    pub fn new(chunk_size: u64) -> Self {
        Self {
            chunk_size,
            ref_size: REF_SIZE as u64,
            tag_size: TAG_SIZE as u64,
            window: crate::chunking::DEFAULT_WINDOW as u64,
        }
    }

    pub fn with_window(mut self, window: u64) -> Self {
        self.window = window;
        self
    }

    pub fn height(&self, n: u64) -> Result<u8, ModelError> {
        tree_height(n, self.chunk_size, self.ref_size).map_err(|_| ModelError::ChunkSize)
    }
}

/// Expected node count of a tree over `n` random bytes: `⌈2n/s⌉`.
pub fn exp_nodes(n: u64, s: u64) -> f64 {
    (2.0 * n as f64 / s as f64).ceil()
}

/// Storage of a content sharing nothing with the store: `(d + s) · exp_nodes`.
pub fn storage_full(n: u64, s: u64, d: u64) -> f64 {
    (d + s) as f64 * exp_nodes(n, s)
}

/// Added storage for a one-byte overwrite under multi-level static chunking:
/// one new node of size at most `s` per level.
pub fn add_strg_sc(h: u8, s: u64, d: u64) -> f64 {
    (d + s) as f64 * (h as f64 + 1.0)
}

/// Expected number of new tree nodes after a one-byte change under
/// multi-level content-defined chunking:
/// `1 + Σ_{k<h} (1 + 3w(1-p_k)p_k)` with `p_k = r^k / s^(k+1)`.
pub fn exp_new_nodes_cdc(h: u8, s: u64, r: u64, w: u64) -> f64 {
    let (s, r, w) = (s as f64, r as f64, w as f64);
    let mut p = 1.0 / s;
    let mut total = 1.0;
    for _ in 0..h {
        total += 1.0 + 3.0 * w * (1.0 - p) * p;
        p *= r / s;
    }
    total
}

/// Bound on the expected size of the chunk covering a uniformly random
/// position: `2s`, independent of the level.
pub fn exp_chunk_size_cdc(s: u64) -> f64 {
    2.0 * s as f64
}

/// Added storage for a one-byte change under multi-level CDC:
/// `(d + 2s) · exp_new_nodes_cdc`.
pub fn add_strg_cdc(h: u8, s: u64, d: u64, w: u64, r: u64) -> f64 {
    (d as f64 + exp_chunk_size_cdc(s)) * exp_new_nodes_cdc(h, s, r, w)
}

pub fn add_strg(scheme: BaseScheme, h: u8, p: &ModelParams) -> f64 {
    match scheme {
        BaseScheme::Static => add_strg_sc(h, p.chunk_size, p.tag_size),
        BaseScheme::ContentDefined => {
            add_strg_cdc(h, p.chunk_size, p.tag_size, p.window, p.ref_size)
        }
    }
}

/// Added storage for a modified range of `delta ≥ 2` bytes: both ends behave
/// like one-byte changes and the interior like a fresh content of
/// `delta - 2` bytes.
pub fn delta_strg(scheme: BaseScheme, h: u8, delta: u64, p: &ModelParams) -> Result<f64, ModelError> {
    if delta < 2 {
        return Err(ModelError::DeltaTooSmall(delta));
    }
    Ok(2.0 * add_strg(scheme, h, p) + storage_full(delta - 2, p.chunk_size, p.tag_size))
}

/// Bound for replacing `delta` bytes of an `n`-byte content, dispatching
/// between the one-byte and general estimates.
pub fn modification_bound(
    scheme: BaseScheme,
    n: u64,
    delta: u64,
    p: &ModelParams,
) -> Result<f64, ModelError> {
    let h = p.height(n)?;
    match delta {
        0 => Ok(0.0),
        1 => Ok(add_strg(scheme, h, p)),
        _ => delta_strg(scheme, h, delta, p),
    }
}
