//! Fault injection for authenticity tests: an adversary with full read/write
//! access to the backend.

use super::{Kvs, KvsError};

/// One way of corrupting a stored element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mutation {
    /// XOR the byte at `offset` with `mask`.
    XorByte { offset: usize, mask: u8 },
    /// Keep only the first `len` bytes.
    Truncate { len: usize },
    /// Append bytes to the value.
    Extend(Vec<u8>),
    /// Replace the value wholesale.
    Substitute(Vec<u8>),
    /// Remove the element.
    Delete,
}

impl Mutation {
    pub fn flip_bit(offset: usize, bit: u8) -> Self {
        Mutation::XorByte {
            offset,
            mask: 1 << (bit % 8),
        }
    }

    pub fn flip_byte(offset: usize) -> Self {
        Mutation::XorByte { offset, mask: 0xff }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TamperError {
    #[error("key not present in backend")]
    Absent,
    #[error("offset {offset} out of range for value of {len} bytes")]
    OutOfRange { offset: usize, len: usize },
    #[error(transparent)]
    Backend(#[from] KvsError),
}

/// Borrows a backend and rewrites its elements behind the store's back.
pub struct Tamper<'a> {
    kvs: &'a mut dyn Kvs,
}

impl<'a> Tamper<'a> {
    pub fn new(kvs: &'a mut dyn Kvs) -> Self {
        Self { kvs }
    }

    /// Applies `mutation` to the element under `key`, which must exist.
    pub fn apply(&mut self, key: &[u8], mutation: &Mutation) -> Result<(), TamperError> {
        let mut value = self.kvs.get(key)?.ok_or(TamperError::Absent)?;
        match mutation {
            Mutation::XorByte { offset, mask } => {
                let len = value.len();
                let byte = value
                    .get_mut(*offset)
                    .ok_or(TamperError::OutOfRange { offset: *offset, len })?;
                *byte ^= mask;
            }
            Mutation::Truncate { len } => value.truncate(*len),
            Mutation::Extend(extra) => value.extend_from_slice(extra),
            Mutation::Substitute(v) => value = v.clone(),
            Mutation::Delete => {
                self.kvs.remove(key)?;
                return Ok(());
            }
        }
        self.kvs.put(key, &value)?;
        Ok(())
    }

    /// Exchanges the values stored under two keys.
    pub fn swap(&mut self, a: &[u8], b: &[u8]) -> Result<(), TamperError> {
        let va = self.kvs.get(a)?.ok_or(TamperError::Absent)?;
        let vb = self.kvs.get(b)?.ok_or(TamperError::Absent)?;
        self.kvs.put(a, &vb)?;
        self.kvs.put(b, &va)?;
        Ok(())
    }
}
