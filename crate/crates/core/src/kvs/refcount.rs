use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::dir::write_atomic;
use super::{Kvs, KvsError, RefCount, StorageReport};

/// Bytes charged per counter when metadata accounting is enabled: the key plus
/// a 64-bit count.
const COUNTER_BYTES: u64 = 8;

/// Adds per-key reference counters to a backend so elements can be deleted
/// once nothing refers to them.
///
/// Counters live out-of-band: in memory, and optionally in a sidecar file of
/// `hexkey<TAB>count` lines rewritten atomically on [`Kvs::flush`]. Values in
/// the wrapped backend are untouched.
#[derive(Debug)]
pub struct RefCounted<B> {
    inner: B,
    counts: BTreeMap<Vec<u8>, u64>,
    sidecar: Option<PathBuf>,
    dirty: bool,
    count_metadata: bool,
}

impl<B: Kvs> RefCounted<B> {
    /// Wraps `inner` with counters kept only in memory.
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            counts: BTreeMap::new(),
            sidecar: None,
            dirty: false,
            count_metadata: false,
        }
    }

    /// Wraps `inner`, loading counters from `sidecar` if it exists.
    pub fn with_sidecar(inner: B, sidecar: impl AsRef<Path>) -> Result<Self, KvsError> {
        let sidecar = sidecar.as_ref().to_path_buf();
        let counts = match fs::read_to_string(&sidecar) {
            Ok(text) => parse_sidecar(&text)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            inner,
            counts,
            sidecar: Some(sidecar),
            dirty: false,
            count_metadata: false,
        })
    }

    /// Whether [`Kvs::report`] charges the counters themselves. Off by default.
    pub fn count_metadata(mut self, yes: bool) -> Self {
        self.count_metadata = yes;
        self
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

fn parse_sidecar(text: &str) -> Result<BTreeMap<Vec<u8>, u64>, KvsError> {
    let mut counts = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = || KvsError::Corrupt(format!("refcount sidecar line {}", lineno + 1));
        let (hexkey, count) = line.split_once('\t').ok_or_else(bad)?;
        let key = hex::decode(hexkey).map_err(|_| bad())?;
        let count: u64 = count.parse().map_err(|_| bad())?;
        if count > 0 {
            counts.insert(key, count);
        }
    }
    Ok(counts)
}

fn render_sidecar(counts: &BTreeMap<Vec<u8>, u64>) -> String {
    let mut out = String::with_capacity(counts.len() * 72);
    for (key, count) in counts {
        out.push_str(&hex::encode(key));
        out.push('\t');
        out.push_str(&count.to_string());
        out.push('\n');
    }
    out
}

impl<B: Kvs> Kvs for RefCounted<B> {
    fn put(&mut self, key: &[u8], value: &[u8]) -> Result<(), KvsError> {
        self.inner.put(key, value)
    }

    fn get(&self, key: &[u8]) -> Result<Option<Vec<u8>>, KvsError> {
        self.inner.get(key)
    }

    fn contains(&self, key: &[u8]) -> Result<bool, KvsError> {
        self.inner.contains(key)
    }

    fn remove(&mut self, key: &[u8]) -> Result<bool, KvsError> {
        if self.counts.remove(key).is_some() {
            self.dirty = true;
        }
        self.inner.remove(key)
    }

    fn keys(&self) -> Result<Vec<Vec<u8>>, KvsError> {
        self.inner.keys()
    }

    fn report(&self) -> StorageReport {
        let mut report = self.inner.report();
        if self.count_metadata {
            report.total_bytes += self
                .counts
                .keys()
                .map(|k| k.len() as u64 + COUNTER_BYTES)
                .sum::<u64>();
        }
        report
    }

    fn flush(&mut self) -> Result<(), KvsError> {
        if let (true, Some(path)) = (self.dirty, &self.sidecar) {
            write_atomic(path, render_sidecar(&self.counts).as_bytes())?;
            self.dirty = false;
        }
        self.inner.flush()
    }

    fn refcounts(&mut self) -> Option<&mut dyn RefCount> {
        Some(self)
    }
}

impl<B: Kvs> RefCount for RefCounted<B> {
    fn refcount_incr(&mut self, key: &[u8]) -> Result<u64, KvsError> {
        if !self.inner.contains(key)? {
            return Err(KvsError::NotCounted(hex::encode(key)));
        }
        let count = self.counts.entry(key.to_vec()).or_insert(0);
        *count += 1;
        self.dirty = true;
        Ok(*count)
    }

    fn refcount_decr(&mut self, key: &[u8]) -> Result<u64, KvsError> {
        let count = self
            .counts
            .get_mut(key)
            .ok_or_else(|| KvsError::NotCounted(hex::encode(key)))?;
        *count -= 1;
        let remaining = *count;
        self.dirty = true;
        if remaining == 0 {
            self.counts.remove(key);
            self.inner.remove(key)?;
        }
        Ok(remaining)
    }

    fn refcount(&self, key: &[u8]) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }
}
