//! Deduplicating, encrypted and authenticated content store over an untrusted
//! key-value backend.
//!
//! Contents are split into a multi-level chunk tree: an inner node covers a
//! byte range, chunks it with a target length that grows geometrically with
//! the node's height, and stores the concatenated references of the resulting
//! children; leaves hold raw bytes. Every node is encrypted with a deterministic authenticated
//! encryption scheme whose 32-byte tag doubles as the node's key, so identical
//! subtrees are stored once and every retrieved byte is authenticated.
//!
//! The pieces are interchangeable strategies selected by name:
//!
//! * [`chunking`]: `sc` (static) and `cdc` (rolling-hash) chunkers,
//! * [`crypto`]: deterministic AEAD suites,
//! * [`kvs`]: `memory` and `dir:PATH` backends.
//!
//! [`model`] holds the closed-form storage cost bounds used as oracles by the
//! experiment harness.

pub mod chunking;
pub mod crypto;
pub mod kvs;
pub mod model;
pub mod registry;
pub mod store;

pub use chunking::{Chunker, ChunkerSpec};
pub use crypto::{ChunkRef, Dae, MasterKey};
pub use kvs::{Kvs, StorageReport};
pub use store::{ContentKey, HeightPolicy, Store, StoreConfig, StoreError};


/// Size of one chunk reference in bytes (R).
pub const REF_SIZE: usize = 32;
/// Size of one authentication tag in bytes (D). Tags are references, so D = R.
pub const TAG_SIZE: usize = REF_SIZE;
