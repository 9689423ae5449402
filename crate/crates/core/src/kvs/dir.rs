use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::{Kvs, KvsError, StorageReport};

/// One file per element under `objects/<hex[0:2]>/<hex[2:4]>/<hex>`, where
/// `hex` is the lowercase hex encoding of the key. Values are stored verbatim.
#[derive(Debug)]
pub struct DirKvs {
    root: PathBuf,
    report: StorageReport,
}

impl DirKvs {
    /// Opens (creating if needed) the store rooted at `root` and recomputes its
    /// accounting from the files present.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, KvsError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("objects"))?;
        let mut kvs = Self {
            root,
            report: StorageReport::default(),
        };
        for key in kvs.keys()? {
            let len = fs::metadata(kvs.object_path(&key))?.len();
            kvs.report.element_count += 1;
            kvs.report.total_bytes += key.len() as u64 + len;
        }
        Ok(kvs)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of the file holding `key`'s value.
    pub fn object_path(&self, key: &[u8]) -> PathBuf {
        let hex = hex::encode(key);
        let mut fan = hex.clone();
        while fan.len() < 4 {
            fan.push('_');
        }
        self.root
            .join("objects")
            .join(&fan[0..2])
            .join(&fan[2..4])
            .join(hex)
    }

    fn read(path: &Path) -> Result<Option<Vec<u8>>, KvsError> {
        match fs::read(path) {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl Kvs for DirKvs {
    fn put(&mut self, key: &[u8], value: &[u8]) -> Result<(), KvsError> {
        let path = self.object_path(key);
        match Self::read(&path)? {
            Some(old) if old == value => return Ok(()),
            Some(old) => {
                self.report.total_bytes -= old.len() as u64;
            }
            None => {
                self.report.element_count += 1;
                self.report.total_bytes += key.len() as u64;
            }
        }
        write_atomic(&path, value)?;
        self.report.total_bytes += value.len() as u64;
        Ok(())
    }

    fn get(&self, key: &[u8]) -> Result<Option<Vec<u8>>, KvsError> {
        Self::read(&self.object_path(key))
    }

    fn contains(&self, key: &[u8]) -> Result<bool, KvsError> {
        Ok(self.object_path(key).is_file())
    }

    fn remove(&mut self, key: &[u8]) -> Result<bool, KvsError> {
        let path = self.object_path(key);
        let len = match fs::metadata(&path) {
            Ok(m) => m.len(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(false),
            Err(e) => return Err(e.into()),
        };
        fs::remove_file(&path)?;
        self.report.element_count -= 1;
        self.report.total_bytes -= key.len() as u64 + len;
        Ok(true)
    }

    fn keys(&self) -> Result<Vec<Vec<u8>>, KvsError> {
        let mut keys = Vec::new();
        for l1 in fs::read_dir(self.root.join("objects"))? {
            let l1 = l1?;
            if !l1.file_type()?.is_dir() {
                continue;
            }
            for l2 in fs::read_dir(l1.path())? {
                let l2 = l2?;
                if !l2.file_type()?.is_dir() {
                    continue;
                }
                for obj in fs::read_dir(l2.path())? {
                    let obj = obj?;
                    let name = obj.file_name();
                    let name = name.to_string_lossy();
                    if name.contains(".tmp") {
                        continue;
                    }
                    let key = hex::decode(name.as_bytes())
                        .map_err(|_| KvsError::Corrupt(format!("unexpected object file {name}")))?;
                    keys.push(key);
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    fn report(&self) -> StorageReport {
        self.report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_reopen() {
        let tmp = tempfile::tempdir().unwrap();
        let key = [0xabu8, 0xcd, 0xef, 0x01];
        {
            let mut kvs = DirKvs::open(tmp.path()).unwrap();
            kvs.put(&key, b"value").unwrap();
            let expected = tmp.path().join("objects/ab/cd/abcdef01");
            assert_eq!(kvs.object_path(&key), expected);
            assert_eq!(fs::read(expected).unwrap(), b"value");
        }
        let kvs = DirKvs::open(tmp.path()).unwrap();
        assert_eq!(
            kvs.report(),
            StorageReport {
                element_count: 1,
                total_bytes: 9
            }
        );
        assert_eq!(kvs.keys().unwrap(), vec![key.to_vec()]);
    }

    #[test]
    fn short_keys_and_missing() {
        let tmp = tempfile::tempdir().unwrap();
        let mut kvs = DirKvs::open(tmp.path()).unwrap();
        assert_eq!(kvs.get(b"\x01").unwrap(), None);
        kvs.put(b"\x01", b"").unwrap();
        assert_eq!(kvs.get(b"\x01").unwrap(), Some(vec![]));
        assert_eq!(kvs.report().total_bytes, 1);
        assert!(kvs.remove(b"\x01").unwrap());
        assert_eq!(kvs.report(), StorageReport::default());
    }
}
