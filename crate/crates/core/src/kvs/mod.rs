//! Untrusted Put/Get key-value backends and their storage accounting.
//!
//! Storage cost of a state is the sum over all elements of `|key| + |value|`.
//! Backends are dumb: overwriting a key replaces its value (last write wins),
//! and nothing stored here is trusted by the layers above.

mod dir;
mod memory;
mod refcount;
pub mod tamper;

use std::io;
use std::path::PathBuf;

pub use dir::DirKvs;
pub use memory::MemoryKvs;
pub use refcount::RefCounted;

use crate::registry::{Registry, UnknownStrategy};

#[derive(Debug, thiserror::Error)]
pub enum KvsError {
    #[error("backend I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt backend state: {0}")]
    Corrupt(String),
    #[error("no reference count for key {0}")]
    NotCounted(String),
    #[error("invalid backend spec `{0}`")]
    InvalidSpec(String),
    #[error(transparent)]
    Unknown(#[from] UnknownStrategy),
}

/// Element count and byte total of a backend state.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct StorageReport {
    pub element_count: u64,
    /// Sum over elements of key length plus value length.
    pub total_bytes: u64,
}

impl StorageReport {
    /// Signed byte difference `self - earlier`.
    pub fn bytes_since(&self, earlier: &StorageReport) -> i64 {
        self.total_bytes as i64 - earlier.total_bytes as i64
    }

    pub fn elements_since(&self, earlier: &StorageReport) -> i64 {
        self.element_count as i64 - earlier.element_count as i64
    }
}

/// Put/Get key-value store.
///
/// Implementations must be safe for concurrent `get`; mutations take `&mut self`
/// and are therefore serialized by the caller.
pub trait Kvs: Send + Sync {
    /// Persists `value` under `key`. Re-putting an identical pair is a no-op.
    fn put(&mut self, key: &[u8], value: &[u8]) -> Result<(), KvsError>;

    fn get(&self, key: &[u8]) -> Result<Option<Vec<u8>>, KvsError>;

    /// Removes `key`, returning whether it was present.
    fn remove(&mut self, key: &[u8]) -> Result<bool, KvsError>;

    /// All keys currently stored, in ascending byte order.
    fn keys(&self) -> Result<Vec<Vec<u8>>, KvsError>;

    fn report(&self) -> StorageReport;

    fn contains(&self, key: &[u8]) -> Result<bool, KvsError> {
        Ok(self.get(key)?.is_some())
    }

    /// Makes buffered metadata durable.
    fn flush(&mut self) -> Result<(), KvsError> {
        Ok(())
    }

    /// Reference-count interface, when this backend maintains one.
    fn refcounts(&mut self) -> Option<&mut dyn RefCount> {
        None
    }
}

/// Per-key reference counters kept beside a backend.
pub trait RefCount {
    /// Increments the counter of an existing key and returns the new count.
    fn refcount_incr(&mut self, key: &[u8]) -> Result<u64, KvsError>;

    /// Decrements the counter of `key`; reaching zero removes the element.
    fn refcount_decr(&mut self, key: &[u8]) -> Result<u64, KvsError>;

    fn refcount(&self, key: &[u8]) -> u64;
}

impl<K: Kvs + ?Sized> Kvs for Box<K> {
    fn put(&mut self, key: &[u8], value: &[u8]) -> Result<(), KvsError> {
        (**self).put(key, value)
    }
    fn get(&self, key: &[u8]) -> Result<Option<Vec<u8>>, KvsError> {
        (**self).get(key)
    }
    fn remove(&mut self, key: &[u8]) -> Result<bool, KvsError> {
        (**self).remove(key)
    }
    fn keys(&self) -> Result<Vec<Vec<u8>>, KvsError> {
        (**self).keys()
    }
    fn report(&self) -> StorageReport {
        (**self).report()
    }
    fn contains(&self, key: &[u8]) -> Result<bool, KvsError> {
        (**self).contains(key)
    }
    fn flush(&mut self) -> Result<(), KvsError> {
        (**self).flush()
    }
    fn refcounts(&mut self) -> Option<&mut dyn RefCount> {
        (**self).refcounts()
    }
}

/// Parsed `--backend` value: a registered backend name and its optional
/// argument, e.g. `memory` or `dir:/var/lib/store`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendSpec {
    pub name: String,
    pub arg: Option<String>,
}

impl BackendSpec {
    pub fn memory() -> Self {
        Self {
            name: "memory".into(),
            arg: None,
        }
    }

    pub fn dir(path: impl Into<PathBuf>) -> Self {
        Self {
            name: "dir".into(),
            arg: Some(path.into().to_string_lossy().into_owned()),
        }
    }

    /// Directory backing this backend, if it lives on disk.
    pub fn path(&self) -> Option<PathBuf> {
        match self.name.as_str() {
            "dir" => self.arg.as_ref().map(PathBuf::from),
            _ => None,
        }
    }
}

impl std::str::FromStr for BackendSpec {
    type Err = KvsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg.to_owned())),
            None => (s, None),
        };
        if name.is_empty() || arg.as_deref() == Some("") {
            return Err(KvsError::InvalidSpec(s.to_owned()));
        }
        Ok(Self {
            name: name.to_owned(),
            arg,
        })
    }
}

impl std::fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.arg {
            Some(arg) => write!(f, "{}:{}", self.name, arg),
            None => f.write_str(&self.name),
        }
    }
}

pub type BackendRegistry = Registry<BackendSpec, dyn Kvs, KvsError>;

/// Registry with the built-in `memory` and `dir` backends.
pub fn backends() -> BackendRegistry {
    let mut reg = BackendRegistry::new("backend");
    reg.register("memory", |spec| match spec.arg {
        None => Ok(Box::new(MemoryKvs::new())),
        Some(_) => Err(KvsError::InvalidSpec(spec.to_string())),
    });
    reg.register("dir", |spec| match &spec.arg {
        Some(path) => Ok(Box::new(DirKvs::open(path)?)),
        None => Err(KvsError::InvalidSpec(spec.to_string())),
    });
    reg
}

/// Opens the backend described by `spec` from the built-in registry.
pub fn open_backend(spec: &BackendSpec) -> Result<Box<dyn Kvs>, KvsError> {
    backends().build(&spec.name, spec)
}
