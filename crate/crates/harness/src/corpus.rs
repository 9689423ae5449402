//! Directory corpora: each first-level subdirectory of the corpus root is one
//! snapshot, and every regular file below it is one content.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chunktree::{Store, StoreError};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::content::{job_rng, ExpRng};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}: not a corpus directory (no snapshot subdirectories)")]
    Empty(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub name: String,
    /// Files keyed by path relative to the snapshot root, sorted by path.
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl Snapshot {
    pub fn total_bytes(&self) -> u64 {
        self.files.iter().map(|(_, b)| b.len() as u64).sum()
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>, CorpusError> {
    let mut entries = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(dir))?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<(), CorpusError> {
    for entry in sorted_entries(dir)? {
        let path = entry.path();
        let meta = fs::metadata(&path).map_err(io_err(&path))?;
        if meta.is_dir() {
            collect_files(root, &path, out)?;
        } else if meta.is_file() {
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let rel = path.strip_prefix(root).unwrap_or(&path).to_path_buf();
            out.push((rel, bytes));
        }
    }
    Ok(())
}

/// Loads every snapshot below `dir` in lexicographic order.
pub fn load_snapshots(dir: &Path) -> Result<Vec<Snapshot>, CorpusError> {
    let mut snapshots = Vec::new();
    for entry in sorted_entries(dir)? {
        let path = entry.path();
        if !fs::metadata(&path).map_err(io_err(&path))?.is_dir() {
            continue;
        }
        let mut files = Vec::new();
        collect_files(&path, &path, &mut files)?;
        files.sort_by(|a, b| a.0.cmp(&b.0));
        snapshots.push(Snapshot {
            name: entry.file_name().to_string_lossy().into_owned(),
            files,
        });
    }
    if snapshots.is_empty() {
        return Err(CorpusError::Empty(dir.to_path_buf()));
    }
    Ok(snapshots)
}

pub fn write_snapshots(dir: &Path, snapshots: &[Snapshot]) -> Result<(), CorpusError> {
    for snap in snapshots {
        for (rel, bytes) in &snap.files {
            let path = dir.join(&snap.name).join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::write(&path, bytes).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

/// Storage before and after ingesting one snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestStep {
    pub snapshot: String,
    pub files: usize,
    pub bytes_in: u64,
    pub before: u64,
    pub after: u64,
}

/// Puts every file of every snapshot into `store`, in order.
pub fn ingest(store: &mut Store, snapshots: &[Snapshot]) -> Result<Vec<IngestStep>, StoreError> {
    let mut steps = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        let before = store.report().total_bytes;
        for (_, bytes) in &snap.files {
            store.put_content(bytes)?;
        }
        steps.push(IngestStep {
            snapshot: snap.name.clone(),
            files: snap.files.len(),
            bytes_in: snap.total_bytes(),
            before,
            after: store.report().total_bytes,
        });
    }
    Ok(steps)
}

/// Parameters of a generated source-tree-like corpus: a few text files of
/// random lines, with a handful of line edits between consecutive versions.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub versions: usize,
    pub files: usize,
    pub file_size: usize,
    pub edits_per_version: usize,
    pub seed: u64,
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        Self {
            versions: 200,
            files: 4,
            file_size: 64 << 10,
            edits_per_version: 3,
            seed: 1,
        }
    }
}

fn random_line(rng: &mut ExpRng) -> Vec<u8> {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz_(){};=0123456789    ";
    let len = rng.gen_range(8..80);
    let mut line: Vec<u8> = (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect();
    line.push(b'\n');
    line
}

fn random_file(rng: &mut ExpRng, size: usize) -> Vec<Vec<u8>> {
    let mut lines = Vec::new();
    let mut total = 0;
    while total < size {
        let l = random_line(rng);
        total += l.len();
        lines.push(l);
    }
    lines
}

fn edit(rng: &mut ExpRng, lines: &mut Vec<Vec<u8>>) {
    let at = rng.gen_range(0..=lines.len());
    match rng.gen_range(0..3) {
        0 => lines.insert(at, random_line(rng)),
        1 if at < lines.len() && lines.len() > 1 => {
            lines.remove(at);
        }
        _ if at < lines.len() => {
            let line = &mut lines[at];
            let pos = rng.gen_range(0..line.len());
            line[pos] = line[pos].wrapping_add(1) | 0x20;
        }
        _ => lines.push(random_line(rng)),
    }
}

impl SyntheticCorpus {
    /// Snapshots `v00000`, `v00001`, ...; half of all edits hit the first file.
    pub fn generate(&self) -> Vec<Snapshot> {
        let mut rng = job_rng(self.seed, 0);
        let mut files: Vec<Vec<Vec<u8>>> = (0..self.files.max(1))
            .map(|_| random_file(&mut rng, self.file_size))
            .collect();
        let mut out = Vec::with_capacity(self.versions);
        for v in 0..self.versions {
            if v > 0 {
                for _ in 0..self.edits_per_version {
                    let f = if rng.gen_bool(0.5) { 0 } else { rng.gen_range(0..files.len()) };
                    edit(&mut rng, &mut files[f]);
                }
            }
            out.push(Snapshot {
                name: format!("v{v:05}"),
                files: files
                    .iter()
                    .enumerate()
                    .map(|(i, lines)| (PathBuf::from(format!("src/file{i:02}.txt")), lines.concat()))
                    .collect(),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chunktree::{MasterKey, StoreConfig};

    fn small() -> SyntheticCorpus {
        SyntheticCorpus {
            versions: 4,
            files: 2,
            file_size: 2000,
            edits_per_version: 2,
            seed: 5,
        }
    }

    #[test]
    fn generation_is_deterministic_and_evolving() {
        let a = small().generate();
        assert_eq!(a, small().generate());
        assert_eq!(a.len(), 4);
        assert!(a.windows(2).all(|w| w[0].files != w[1].files));
        assert!(a[0].files.iter().all(|(_, b)| b.len() >= 2000));
    }

    #[test]
    fn disk_round_trip_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let snaps = small().generate();
        write_snapshots(dir.path(), &snaps).unwrap();
        fs::write(dir.path().join("README"), b"stray file").unwrap();
        assert_eq!(load_snapshots(dir.path()).unwrap(), snaps);
    }

    #[test]
    fn empty_dir_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_snapshots(dir.path()), Err(CorpusError::Empty(_))));
    }

    #[test]
    fn identical_snapshot_adds_nothing() {
        let mut snaps = small().generate();
        snaps.truncate(1);
        snaps.push(Snapshot {
            name: "v99999".into(),
            ..snaps[0].clone()
        });
        let key = MasterKey::from_rng(&mut job_rng(0, 0));
        let mut store = Store::in_memory(StoreConfig::ml_cdc(128), &key).unwrap();
        let steps = ingest(&mut store, &snaps).unwrap();
        assert!(steps[0].after > 0);
        assert_eq!(steps[1].after, steps[1].before);
    }
}
