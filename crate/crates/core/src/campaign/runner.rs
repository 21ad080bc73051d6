use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_stream, RandomSource};

/// Trials between checkpoint flushes.
pub const CHECKPOINT_INTERVAL: u64 = 1_000_000;

/// Trials handed to a worker at a time.
const CHUNK: u64 = 4096;

/// How a campaign is executed; none of this affects its results.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; zero uses one per core.
    pub workers: usize,
    /// Record wall-clock times in the report.
    pub timing: bool,
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        RunOptions { workers, timing: false }
    }

    /// Runs `f` inside a pool with the configured number of workers.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Where and under which key a counting loop persists its progress.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub path: PathBuf,
    pub key: String,
}

impl Checkpoint {
    /// Sidecar `<dir>/<label>-<seed>-<hash16>.ckpt`.
    pub fn new(dir: &Path, label: &str, seed: u64, config_hash: &str) -> Self {
        let hash16 = &config_hash[..config_hash.len().min(16)];
        Checkpoint {
            path: dir.join(format!("{label}-{seed}-{hash16}.ckpt")),
            key: format!("{label}:{seed}:{config_hash}"),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Progress {
    key: String,
    completed: u64,
    hits: u64,
}

fn load(cp: &Checkpoint) -> Result<Option<Progress>> {
    match std::fs::read_to_string(&cp.path) {
        Ok(text) => {
            let p: Progress = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", cp.path.display())))?;
            Ok((p.key == cp.key).then_some(p))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn store(cp: &Checkpoint, completed: u64, hits: u64) -> Result<()> {
    let p = Progress {
        key: cp.key.clone(),
        completed,
        hits,
    };
    let tmp = cp.path.with_extension("ckpt.tmp");
    std::fs::write(&tmp, serde_json::to_string(&p).expect("progress serializes"))?;
    std::fs::rename(&tmp, &cp.path)?;
    Ok(())
}

/// Counts the trials `k ∈ [0, trials)` for which `trial` returns true, where trial `k`
/// draws from `derive_stream(seed, k)`.
///
/// The count is an integer sum, so it does not depend on how trials are spread over
/// workers. With a checkpoint the partial count is flushed every
/// [`CHECKPOINT_INTERVAL`] trials and picked up again on the next run.
pub fn count_trials<F>(seed: u64, trials: u64, checkpoint: Option<&Checkpoint>, trial: F) -> Result<u64>
where
    F: Fn(&mut RandomSource) -> Result<bool> + Sync,
{
    let (mut done, mut hits) = match checkpoint.map(load).transpose()?.flatten() {
        Some(p) if p.completed <= trials => (p.completed, p.hits),
        _ => (0, 0),
    };
    while done < trials {
        let end = (done + CHECKPOINT_INTERVAL).min(trials);
        let chunks = (end - done).div_ceil(CHUNK);
        let block: u64 = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = done + c * CHUNK;
                let hi = (lo + CHUNK).min(end);
                let mut count = 0u64;
                for k in lo..hi {
                    if trial(&mut derive_stream(seed, k))? {
                        count += 1;
                    }
                }
                Ok(count)
            })
            .sum::<Result<u64>>()?;
        hits += block;
        done = end;
        if let Some(cp) = checkpoint {
            store(cp, done, hits)?;
        }
    }
    Ok(hits)
}

/// `z·√(q(1−q)/trials)`.
pub fn binomial_ci(estimate: f64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    z * (estimate * (1.0 - estimate) / trials as f64).sqrt()
}
