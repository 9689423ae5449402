//! The experiment drivers. Every trial runs in its own in-memory store with an
//! RNG stream derived from the run seed and the trial's position in the job
//! list, so output is reproducible regardless of thread scheduling.

use std::fmt;
use std::io;
use std::path::PathBuf;
use std::str::FromStr;

use chunktree::model::{self, ModelParams};
use chunktree::{MasterKey, Store, StoreError, TAG_SIZE};
use rayon::prelude::*;
use serde::Serialize;

use crate::content::{insert_byte, job_rng, overwrite_range, random_bytes, ExpRng};
use crate::corpus;
use crate::variant::Variant;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Replace a random δ-byte range and measure the added storage.
    Delta,
    /// Storage of one random content relative to its length.
    Expansion,
    /// One-byte overwrite at a random offset.
    Overwrite,
    /// One random byte inserted at a random offset.
    Insert,
    /// Cumulative storage of a chain of one-byte-insert versions.
    Versions,
    /// Cumulative storage of directory snapshots.
    Corpus,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Delta,
        Experiment::Expansion,
        Experiment::Overwrite,
        Experiment::Insert,
        Experiment::Versions,
        Experiment::Corpus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Delta => "delta",
            Experiment::Expansion => "expansion",
            Experiment::Overwrite => "overwrite",
            Experiment::Insert => "insert",
            Experiment::Versions => "versions",
            Experiment::Corpus => "corpus",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub variants: Vec<Variant>,
    pub chunk_sizes: Vec<u64>,
    /// Content sizes `n` (ignored by `corpus`).
    pub sizes: Vec<u64>,
    /// Modified-range lengths for `delta`.
    pub deltas: Vec<u64>,
    /// Number of modified versions for `versions`.
    pub versions: usize,
    pub trials: usize,
    pub seed: u64,
    pub window: usize,
    pub min_chunk: Option<u64>,
    pub max_chunk: Option<u64>,
    /// Snapshot directory for `corpus`.
    pub corpus: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            variants: vec![Variant::ml_cdc()],
            chunk_sizes: vec![128],
            sizes: vec![1 << 20],
            deltas: vec![1],
            versions: 125,
            trials: 20,
            seed: 1,
            window: chunktree::chunking::DEFAULT_WINDOW,
            min_chunk: None,
            max_chunk: None,
            corpus: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.variants.is_empty() || self.chunk_sizes.is_empty() {
            return bad("need at least one scheme and one chunk size".into());
        }
        for v in &self.variants {
            for &s in &self.chunk_sizes {
                self.store_config(v, s).validate()?;
            }
        }
        match self.experiment {
            Experiment::Corpus => {
                if self.corpus.is_none() {
                    return bad("corpus experiment needs a corpus directory".into());
                }
            }
            _ if self.sizes.is_empty() => return bad("need at least one content size".into()),
            Experiment::Delta => {
                for &n in &self.sizes {
                    for &d in &self.deltas {
                        if d == 0 || d > n {
                            return bad(format!("delta {d} outside 1..={n}"));
                        }
                    }
                }
            }
            Experiment::Overwrite if self.sizes.contains(&0) => {
                return bad("overwrite needs non-empty contents".into());
            }
            _ => {}
        }
        Ok(())
    }

    fn store_config(&self, v: &Variant, chunk_size: u64) -> chunktree::StoreConfig {
        v.store_config(chunk_size)
            .with_window(self.window)
            .with_bounds(self.min_chunk, self.max_chunk)
    }

    fn model_params(&self, chunk_size: u64) -> ModelParams {
        ModelParams::new(chunk_size).with_window(self.window as u64)
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub experiment: String,
    pub scheme: String,
    pub height_policy: String,
    #[serde(rename = "S")]
    pub chunk_size: u64,
    pub n: u64,
    pub delta: u64,
    pub trial: u64,
    pub bytes_before: u64,
    pub bytes_after: u64,
    pub delta_bytes: i64,
    pub model_bound: Option<f64>,
    pub step: u64,
}

impl MeasurementRecord {
    /// `wfc`, `sc`, `ml-cdc`, ... for this row.
    pub fn variant_label(&self) -> String {
        match self.height_policy.parse() {
            Ok(h) => Variant::new(self.scheme.clone(), h).label(),
            Err(_) => self.scheme.clone(),
        }
    }
}

/// Shared fields of the rows of one job.
struct RowTemplate<'a> {
    experiment: Experiment,
    variant: &'a Variant,
    chunk_size: u64,
    trial: u64,
}

impl RowTemplate<'_> {
    fn row(&self, n: u64, delta: u64, before: u64, after: u64, bound: Option<f64>, step: u64) -> MeasurementRecord {
        MeasurementRecord {
            experiment: self.experiment.name().into(),
            scheme: self.variant.scheme.clone(),
            height_policy: self.variant.height.to_string(),
            chunk_size: self.chunk_size,
            n,
            delta,
            trial: self.trial,
            bytes_before: before,
            bytes_after: after,
            delta_bytes: after as i64 - before as i64,
            model_bound: bound,
            step,
        }
    }
}

#[derive(Debug, Clone)]
struct Job {
    variant: Variant,
    chunk_size: u64,
    n: u64,
    delta: u64,
    trial: u64,
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let deltas: &[u64] = match cfg.experiment {
        Experiment::Delta => &cfg.deltas,
        Experiment::Overwrite | Experiment::Insert | Experiment::Versions => &[1],
        _ => &[0],
    };
    let mut out = Vec::new();
    for v in &cfg.variants {
        for &s in &cfg.chunk_sizes {
            for &n in &cfg.sizes {
                for &delta in deltas {
                    for trial in 0..cfg.trials as u64 {
                        out.push(Job {
                            variant: v.clone(),
                            chunk_size: s,
                            n,
                            delta,
                            trial,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs `cfg` and returns its rows in job order.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<MeasurementRecord>, ExperimentError> {
    cfg.validate()?;
    if cfg.experiment == Experiment::Corpus {
        return run_corpus(cfg);
    }
    let jobs = jobs(cfg);
    let results: Vec<Result<Vec<MeasurementRecord>, ExperimentError>> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| run_job(cfg, job, job_rng(cfg.seed, i as u64)))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn fresh_store(cfg: &ExperimentConfig, v: &Variant, chunk_size: u64, rng: &mut ExpRng) -> Result<Store, ExperimentError> {
    let key = MasterKey::from_rng(rng);
    Ok(Store::in_memory(cfg.store_config(v, chunk_size), &key)?)
}

fn run_job(cfg: &ExperimentConfig, job: &Job, mut rng: ExpRng) -> Result<Vec<MeasurementRecord>, ExperimentError> {
    let mut store = fresh_store(cfg, &job.variant, job.chunk_size, &mut rng)?;
    let tpl = RowTemplate {
        experiment: cfg.experiment,
        variant: &job.variant,
        chunk_size: job.chunk_size,
        trial: job.trial,
    };
    let params = cfg.model_params(job.chunk_size);
    let modelled = job.variant.modelled();
    let n = job.n;
    let mut content = random_bytes(&mut rng, n as usize);
    store.put_content(&content)?;
    let first = store.report().total_bytes;

    let rows = match cfg.experiment {
        Experiment::Expansion => {
            let bound = modelled.map(|_| model::storage_full(n, job.chunk_size, TAG_SIZE as u64));
            vec![tpl.row(n, 0, 0, first, bound, 0)]
        }
        Experiment::Delta | Experiment::Overwrite => {
            overwrite_range(&mut rng, &mut content, job.delta as usize);
            store.put_content(&content)?;
            let bound = modelled
                .map(|s| model::modification_bound(s, n, job.delta, &params))
                .transpose()
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            vec![tpl.row(n, job.delta, first, store.report().total_bytes, bound, 0)]
        }
        Experiment::Insert => {
            insert_byte(&mut rng, &mut content);
            store.put_content(&content)?;
            // shifting only keeps the one-byte estimate for content-defined chunking
            let bound = match modelled {
                Some(s @ model::BaseScheme::ContentDefined) => {
                    Some(model::add_strg(s, params.height(n + 1).unwrap_or(0), &params))
                }
                _ => None,
            };
            vec![tpl.row(n, 1, first, store.report().total_bytes, bound, 0)]
        }
        Experiment::Versions => {
            let mut rows = Vec::with_capacity(cfg.versions + 1);
            rows.push(tpl.row(n, 0, 0, first, None, 0));
            let mut before = first;
            for step in 1..=cfg.versions as u64 {
                insert_byte(&mut rng, &mut content);
                store.put_content(&content)?;
                let after = store.report().total_bytes;
                rows.push(tpl.row(content.len() as u64, 1, before, after, None, step));
                before = after;
            }
            rows
        }
        Experiment::Corpus => unreachable!("handled by run_corpus"),
    };
    Ok(rows)
}

fn run_corpus(cfg: &ExperimentConfig) -> Result<Vec<MeasurementRecord>, ExperimentError> {
    let dir = cfg.corpus.as_ref().expect("validated");
    let snapshots = corpus::load_snapshots(dir)?;
    let mut combos = Vec::new();
    for v in &cfg.variants {
        for &s in &cfg.chunk_sizes {
            combos.push((v.clone(), s));
        }
    }
    let results: Vec<Result<Vec<MeasurementRecord>, ExperimentError>> = combos
        .par_iter()
        .enumerate()
        .map(|(i, (v, s))| {
            let mut rng = job_rng(cfg.seed, i as u64);
            let mut store = fresh_store(cfg, v, *s, &mut rng)?;
            let tpl = RowTemplate {
                experiment: Experiment::Corpus,
                variant: v,
                chunk_size: *s,
                trial: 0,
            };
            corpus::ingest(&mut store, &snapshots)
                .map(|steps| {
                    steps
                        .iter()
                        .enumerate()
                        .map(|(i, st)| tpl.row(st.bytes_in, 0, st.before, st.after, None, i as u64))
                        .collect()
                })
                .map_err(Into::into)
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(rows: &[MeasurementRecord], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Arithmetic mean of `delta_bytes` over `rows`.
pub fn mean_delta<'a>(rows: impl IntoIterator<Item = &'a MeasurementRecord>) -> f64 {
    let (sum, count) = rows
        .into_iter()
        .fold((0f64, 0usize), |(s, c), r| (s + r.delta_bytes as f64, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}
