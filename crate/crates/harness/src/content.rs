//! Seeded content generation and single-edit modifications.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type ExpRng = ChaCha8Rng;

/// Deterministic RNG for job `index` of a run seeded with `seed`.
pub fn job_rng(seed: u64, index: u64) -> ExpRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_bytes<R: RngCore>(rng: &mut R, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

/// Replaces a uniformly chosen `delta`-byte range with fresh random bytes that
/// differ from the original range. Returns the range start.
pub fn overwrite_range<R: Rng>(rng: &mut R, content: &mut [u8], delta: usize) -> usize {
    assert!(delta >= 1 && delta <= content.len(), "delta out of range");
    let start = rng.gen_range(0..=content.len() - delta);
    let range = start..start + delta;
    let mut fresh = random_bytes(rng, delta);
    while fresh == content[range.clone()] {
        fresh = random_bytes(rng, delta);
    }
    content[range].copy_from_slice(&fresh);
    start
}

/// Inserts one random byte at a uniformly chosen position in `0..=len`.
pub fn insert_byte<R: Rng>(rng: &mut R, content: &mut Vec<u8>) -> usize {
    let pos = rng.gen_range(0..=content.len());
    content.insert(pos, rng.gen());
    pos
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overwrite_changes_exactly_the_range() {
        let mut rng = job_rng(1, 0);
        let original = random_bytes(&mut rng, 1000);
        for delta in [1usize, 7, 1000] {
            let mut edited = original.clone();
            let start = overwrite_range(&mut rng, &mut edited, delta);
            assert_ne!(edited, original);
            assert_eq!(&edited[..start], &original[..start]);
            assert_eq!(&edited[start + delta..], &original[start + delta..]);
        }
    }

    #[test]
    fn insert_grows_by_one() {
        let mut rng = job_rng(2, 0);
        let mut v = random_bytes(&mut rng, 10);
        let before = v.clone();
        let pos = insert_byte(&mut rng, &mut v);
        assert_eq!(v.len(), 11);
        assert_eq!(&v[..pos], &before[..pos]);
        assert_eq!(&v[pos + 1..], &before[pos..]);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a = random_bytes(&mut job_rng(5, 0), 32);
        let b = random_bytes(&mut job_rng(5, 1), 32);
        assert_ne!(a, b);
        assert_eq!(a, random_bytes(&mut job_rng(5, 0), 32));
    }
}
