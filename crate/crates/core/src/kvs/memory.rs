use std::collections::BTreeMap;

use super::{Kvs, KvsError, StorageReport};

/// In-memory backend.
#[derive(Debug, Default, Clone)]
pub struct MemoryKvs {
    map: BTreeMap<Vec<u8>, Vec<u8>>,
    total_bytes: u64,
}

impl MemoryKvs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u8], &[u8])> {
        self.map.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }
}

impl Kvs for MemoryKvs {
    fn put(&mut self, key: &[u8], value: &[u8]) -> Result<(), KvsError> {
        match self.map.get_mut(key) {
            Some(old) if old.as_slice() == value => {}
            Some(old) => {
                self.total_bytes -= old.len() as u64;
                self.total_bytes += value.len() as u64;
                *old = value.to_vec();
            }
            None => {
                self.total_bytes += (key.len() + value.len()) as u64;
                self.map.insert(key.to_vec(), value.to_vec());
            }
        }
        Ok(())
    }

    fn get(&self, key: &[u8]) -> Result<Option<Vec<u8>>, KvsError> {
        Ok(self.map.get(key).cloned())
    }

    fn contains(&self, key: &[u8]) -> Result<bool, KvsError> {
        Ok(self.map.contains_key(key))
    }

    fn remove(&mut self, key: &[u8]) -> Result<bool, KvsError> {
        match self.map.remove(key) {
            Some(v) => {
                self.total_bytes -= (key.len() + v.len()) as u64;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn keys(&self) -> Result<Vec<Vec<u8>>, KvsError> {
        Ok(self.map.keys().cloned().collect())
    }

    fn report(&self) -> StorageReport {
        StorageReport {
            element_count: self.map.len() as u64,
            total_bytes: self.total_bytes,
        }
    }
}
