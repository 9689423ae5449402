use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chunktree::kvs::BackendSpec;
use chunktree::store::Manifest;
use chunktree::{ContentKey, HeightPolicy, MasterKey, Store, StoreConfig, StoreError};
use chunktree_harness::corpus::{write_snapshots, SyntheticCorpus};
use chunktree_harness::experiments::write_csv;
use chunktree_harness::{run, Experiment, ExperimentConfig, Variant};
use clap::{Args, Parser, Subcommand};

/// Deduplicating encrypted content store and its storage experiments.
#[derive(Parser)]
#[command(name = "chunktree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a directory store (and the key file, if it does not exist yet).
    Init {
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Insert a file and print its content key.
    Put {
        file: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Retrieve a content by key.
    Get {
        key: ContentKey,
        /// Output file (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Drop one reference to a content, removing chunks nothing else uses.
    Delete {
        key: ContentKey,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Print element count and total stored bytes.
    Stats {
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Print per-level node counts and sizes of a stored content.
    Describe {
        key: ContentKey,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Replace a random δ-byte range.
    Delta(ExpArgs),
    /// Storage of a single content relative to its size.
    Expansion(ExpArgs),
    /// One-byte overwrite.
    Overwrite(ExpArgs),
    /// One-byte insert.
    Insert(ExpArgs),
    /// Chain of one-byte-insert versions.
    Versions(ExpArgs),
    /// Ingest directory snapshots (first-level subdirectories, in name order).
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Write a synthetic evolving corpus of text files.
    GenCorpus {
        dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        versions: usize,
        #[arg(long, default_value_t = 4)]
        files: usize,
        #[arg(long, default_value_t = 64 << 10)]
        file_size: usize,
        #[arg(long, default_value_t = 3)]
        edits: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct StoreArgs {
    /// `memory` or `dir:PATH`.
    #[arg(long, default_value = "memory", value_parser = parse_backend)]
    backend: BackendSpec,
    /// 64-byte master key file. Memory stores use a throwaway key without it.
    #[arg(long)]
    key_file: Option<PathBuf>,
    /// Chunker: `sc` or `cdc` [default: cdc].
    #[arg(long)]
    scheme: Option<String>,
    /// `auto` or a fixed tree height [default: auto].
    #[arg(long)]
    height: Option<HeightPolicy>,
    /// Target chunk size S [default: 128].
    #[arg(long)]
    chunk_size: Option<u64>,
    /// Rolling-hash window [default: 48].
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    min_chunk: Option<u64>,
    #[arg(long)]
    max_chunk: Option<u64>,
}

fn parse_backend(s: &str) -> Result<BackendSpec, String> {
    let spec: BackendSpec = s.parse().map_err(|e| format!("{e}"))?;
    let registry = chunktree::kvs::backends();
    if !registry.contains(&spec.name) {
        return Err(format!("unknown backend `{}` (available: {})", spec.name, registry.names().collect::<Vec<_>>().join(", ")));
    }
    Ok(spec)
}

impl StoreArgs {
    fn overrides_given(&self) -> bool {
        self.scheme.is_some()
            || self.height.is_some()
            || self.chunk_size.is_some()
            || self.window.is_some()
            || self.min_chunk.is_some()
            || self.max_chunk.is_some()
    }

    fn config(&self, base: StoreConfig) -> StoreConfig {
        let mut c = base;
        if let Some(s) = &self.scheme {
            c.scheme = s.clone();
        }
        if let Some(h) = self.height {
            c.height = h;
        }
        if let Some(s) = self.chunk_size {
            c.chunk_size = s;
        }
        if let Some(w) = self.window {
            c.window = w;
        }
        if self.min_chunk.is_some() || self.max_chunk.is_some() {
            c = c.with_bounds(self.min_chunk, self.max_chunk);
        }
        c
    }

    fn key(&self, create: bool) -> anyhow::Result<MasterKey> {
        match &self.key_file {
            Some(path) if create && !path.exists() => {
                let key = MasterKey::generate()?;
                key.write_file(path)
                    .with_context(|| format!("writing key file {}", path.display()))?;
                Ok(key)
            }
            Some(path) => MasterKey::read_file(path)
                .with_context(|| format!("reading key file {}", path.display())),
            None if self.backend.path().is_none() => Ok(MasterKey::generate()?),
            None => bail!("--key-file is required for directory stores"),
        }
    }

    fn init(&self) -> anyhow::Result<Store> {
        let key = self.key(true)?;
        let config = self.config(StoreConfig::ml_cdc(128)).refcounted(true);
        if let Some(dir) = self.backend.path() {
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Store::open(config, &key, &self.backend)?)
    }

    /// Opens an existing store; flags, when given, must agree with its manifest.
    fn open(&self) -> anyhow::Result<Store> {
        let key = self.key(false)?;
        let Some(dir) = self.backend.path() else {
            return Ok(Store::open(self.config(StoreConfig::ml_cdc(128)).refcounted(true), &key, &self.backend)?);
        };
        let manifest = Manifest::load(&dir)?
            .with_context(|| format!("{} is not a store; run `chunktree init` first", dir.display()))?;
        if !self.overrides_given() {
            return Ok(Store::open_dir(dir, &key)?);
        }
        Ok(Store::open(self.config(manifest.to_config()), &key, &self.backend)?)
    }
}

#[derive(Args)]
struct ExpArgs {
    /// Chunkers to run.
    #[arg(long, value_delimiter = ',', default_value = "sc,cdc")]
    scheme: Vec<String>,
    /// Height policies to run; 0 is whole-content storage.
    #[arg(long, value_delimiter = ',', default_value = "auto")]
    height: Vec<HeightPolicy>,
    #[arg(long, value_delimiter = ',', default_value = "128")]
    chunk_size: Vec<u64>,
    #[arg(long, default_value_t = chunktree::chunking::DEFAULT_WINDOW)]
    window: usize,
    #[arg(long)]
    min_chunk: Option<u64>,
    #[arg(long)]
    max_chunk: Option<u64>,
    /// Content sizes n in bytes.
    #[arg(long, value_delimiter = ',', default_value = "1048576")]
    size: Vec<u64>,
    /// Modified-range lengths (delta experiment).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    delta: Vec<u64>,
    #[arg(long, default_value_t = 125)]
    versions: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExpArgs {
    fn config(&self, experiment: Experiment, corpus: Option<&Path>) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            variants: Variant::cross(&self.scheme, &self.height),
            chunk_sizes: self.chunk_size.clone(),
            sizes: self.size.clone(),
            deltas: self.delta.clone(),
            versions: self.versions,
            trials: self.trials,
            seed: self.seed,
            window: self.window,
            min_chunk: self.min_chunk,
            max_chunk: self.max_chunk,
            corpus: corpus.map(Path::to_path_buf),
        }
    }
}

fn experiment(args: &ExpArgs, experiment: Experiment, corpus: Option<&Path>) -> anyhow::Result<()> {
    let rows = run(&args.config(experiment, corpus))?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, io::BufWriter::new(file))?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn execute(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Init { store } => {
            let store = store.init()?;
            let c = store.config();
            println!("initialized {} store, S={}, height {}", c.scheme, c.chunk_size, c.height);
        }
        Command::Put { file, store } => {
            let content = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let key = store.open()?.put_content(&content)?;
            println!("{key}");
        }
        Command::Get { key, out, store } => {
            let content = store.open()?.get_content(&key)?;
            match out {
                Some(path) => fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?,
                None => io::stdout().lock().write_all(&content)?,
            }
        }
        Command::Delete { key, store } => store.open()?.delete_content(&key)?,
        Command::Stats { store } => {
            let report = store.open()?.report();
            println!("elements {}", report.element_count);
            println!("bytes {}", report.total_bytes);
        }
        Command::Describe { key, store } => {
            let tree = store.open()?.describe_tree(&key)?;
            println!("height nodes stored_bytes content_bytes");
            for l in tree.level_stats().iter().rev() {
                println!("{} {} {} {}", l.height, l.nodes, l.total_size, l.total_length);
            }
        }
        Command::Delta(a) => experiment(&a, Experiment::Delta, None)?,
        Command::Expansion(a) => experiment(&a, Experiment::Expansion, None)?,
        Command::Overwrite(a) => experiment(&a, Experiment::Overwrite, None)?,
        Command::Insert(a) => experiment(&a, Experiment::Insert, None)?,
        Command::Versions(a) => experiment(&a, Experiment::Versions, None)?,
        Command::Corpus { dir, exp } => experiment(&exp, Experiment::Corpus, Some(&dir))?,
        Command::GenCorpus {
            dir,
            versions,
            files,
            file_size,
            edits,
            seed,
        } => {
            let corpus = SyntheticCorpus {
                versions,
                files,
                file_size,
                edits_per_version: edits,
                seed,
            };
            write_snapshots(&dir, &corpus.generate())?;
        }
    }
    Ok(())
}

/// 3: a chunk is missing; 4: a chunk failed verification or is malformed.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<StoreError>() {
        Some(StoreError::MissingChunk { .. } | StoreError::UnknownKey(_)) => 3,
        Some(StoreError::Authenticity { .. } | StoreError::MalformedSuperchunk { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("chunktree: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
