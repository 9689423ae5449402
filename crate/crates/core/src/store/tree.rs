//! Chunk-tree geometry: height selection and per-level target lengths.

use num_bigint::BigUint;

use super::StoreError;

/// Height of the chunk tree for a content of `n` bytes: the smallest `h` with
/// `n ≤ S^(h+1) / R^h`. Contents of at most `S` bytes (including the empty
/// content) get a single leaf, `h = 0`.
pub fn tree_height(n: u64, s: u64, r: u64) -> Result<u8, StoreError> {
    if r == 0 || s <= r {
        return Err(StoreError::Config(format!(
            "chunk size {s} must exceed reference size {r}"
        )));
    }
    let (s, r) = (BigUint::from(s), BigUint::from(r));
    // invariant: lhs = n·R^h, rhs = S^(h+1)
    let mut lhs = BigUint::from(n);
    let mut rhs = s.clone();
    for h in 0..=u8::MAX {
        if lhs <= rhs {
            return Ok(h);
        }
        lhs *= &r;
        rhs *= &s;
    }
    Err(StoreError::Config(format!(
        "content of {n} bytes needs a tree taller than 255 levels"
    )))
}

/// Target chunk length used when chunking a height-`h` node into its
/// children: `round(S^h / R^(h-1))`, at least 1. Saturates at `u64::MAX`.
pub fn level_target(h: u8, s: u64, r: u64) -> Result<u64, StoreError> {
    if h == 0 {
        return Err(StoreError::Config("leaves are not chunked".into()));
    }
    if r == 0 {
        return Err(StoreError::Config("reference size must be positive".into()));
    }
    let num = BigUint::from(s).pow(h as u32);
    let den = BigUint::from(r).pow(h as u32 - 1);
    let rounded = (num + &den / 2u32) / den;
    let target = u64::try_from(rounded).unwrap_or(u64::MAX);
    Ok(target.max(1))
}

/// Scales a leaf-level length bound to height `h`, keeping its ratio to the
/// level target.
pub(crate) fn scale_bound(bound: u64, h: u8, s: u64, r: u64) -> Result<u64, StoreError> {
    let target = level_target(h, s, r)? as u128;
    let scaled = (bound as u128 * target + s as u128 / 2) / s as u128;
    Ok(u64::try_from(scaled).unwrap_or(u64::MAX).max(1))
}
