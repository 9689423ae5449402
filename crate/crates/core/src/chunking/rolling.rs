//! Karp-Rabin rolling hash and the content-defined chunker built on it.
//!
//! The hash of a window `b[0..W)` is `Σ T[b[i]] · B^(W-1-i) mod 2^64`, where
//! `T` is a fixed table of pseudo-random 64-bit words (one per byte value) and
//! `B` is [`MULTIPLIER`]. A window ending at 1-based position `i` produces a
//! cut after byte `i` iff `hash mod target == target - 1`.
//!
//! These constants are part of the on-disk format: changing any of them
//! changes every chunk reference.

use super::{validate_bounds, ChunkLimits, Chunker, ChunkingError};

/// Odd 64-bit multiplier (`⌊2^64 / φ⌋`, rounded to odd).
pub const MULTIPLIER: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of the splitmix64 sequence that fills [`TABLE`].
pub const TABLE_SEED: u64 = 0x6364_635f_7461_626c;

/// Human-readable boundary rule, recorded in store manifests.
pub const CRITERION: &str = "hash mod target == target - 1; cut after window-final byte";

/// Byte substitution table.
pub static TABLE: [u64; 256] = build_table(TABLE_SEED);

const fn splitmix64(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (state, z ^ (z >> 31))
}

const fn build_table(seed: u64) -> [u64; 256] {
    let mut table = [0u64; 256];
    let mut state = seed;
    let mut i = 0;
    while i < 256 {
        let (next, value) = splitmix64(state);
        state = next;
        table[i] = value;
        i += 1;
    }
    table
}

/// Rolling polynomial hash over a fixed-size window.
#[derive(Debug, Clone)]
pub struct RollingHash {
    window: usize,
    /// `B^W`, the weight a byte has once it leaves the window.
    out_weight: u64,
    hash: u64,
}

impl RollingHash {
    pub fn new(window: usize) -> Self {
        let mut out_weight = 1u64;
        for _ in 0..window {
            out_weight = out_weight.wrapping_mul(MULTIPLIER);
        }
        Self {
            window,
            out_weight,
            hash: 0,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn value(&self) -> u64 {
        self.hash
    }

    pub fn reset(&mut self) {
        self.hash = 0;
    }

    /// Appends `byte` to the window without removing anything.
    #[inline]
    pub fn push(&mut self, byte: u8) {
        self.hash = self
            .hash
            .wrapping_mul(MULTIPLIER)
            .wrapping_add(TABLE[byte as usize]);
    }

    /// Slides the window by one: `incoming` enters, `outgoing` (the byte
    /// `window` positions back) leaves.
    #[inline]
    pub fn roll(&mut self, outgoing: u8, incoming: u8) {
        self.push(incoming);
        self.hash = self
            .hash
            .wrapping_sub(TABLE[outgoing as usize].wrapping_mul(self.out_weight));
    }

    /// Hash of `bytes` evaluated directly (Horner's rule), independent of any
    /// rolling state.
    pub fn hash_of(bytes: &[u8]) -> u64 {
        bytes.iter().fold(0u64, |h, &b| {
            h.wrapping_mul(MULTIPLIER).wrapping_add(TABLE[b as usize])
        })
    }
}

/// Content-defined chunker over a [`RollingHash`] window.
#[derive(Debug, Clone)]
pub struct CdcChunker {
    window: usize,
}

impl CdcChunker {
    pub const NAME: &'static str = "cdc";

    pub fn new(window: usize) -> Result<Self, ChunkingError> {
        validate_bounds(window, None, None)?;
        Ok(Self { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

impl Chunker for CdcChunker {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn supports_bounds(&self) -> bool {
        true
    }

    fn cut_points(&self, content: &[u8], limits: &ChunkLimits) -> Vec<usize> {
        let n = content.len();
        let w = self.window;
        let target = limits.target.max(1);
        let hit = target - 1;
        let min = limits.min.unwrap_or(0);
        let max = limits.max.unwrap_or(u64::MAX);

        let mut cuts = Vec::with_capacity(n / target.min(n.max(1) as u64) as usize + 1);
        let mut rh = RollingHash::new(w);
        let mut last = 0usize;
        for (i, &byte) in content.iter().enumerate() {
            if i >= w {
                rh.roll(content[i - w], byte);
            } else {
                rh.push(byte);
            }
            let end = i + 1;
            if end >= n {
                break;
            }
            let len = (end - last) as u64;
            let forced = len >= max;
            let matched = end >= w && len >= min && rh.value() % target == hit;
            if forced || matched {
                cuts.push(end);
                last = end;
            }
        }
        cuts
    }
}
