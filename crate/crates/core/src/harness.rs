//! Batch, repeated, and bootstrap estimation drivers.
//!
//! Child seeds derive purely from `(master seed, role, index)` via
//! [`crate::rng::child_seed`], so results are order-stable and bitwise
//! identical whether fits run sequentially or on the worker pool.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::dataset::{Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::method::{estimate_shared, ClusterModel, MethodSpec, ModelList};
use crate::rng::{child_seed, rng_for};

/// How a bootstrap training sample was drawn; enough to recreate it exactly
/// without storing the sample itself.
#[derive(Debug, Clone, PartialEq)]
pub struct BootRecipe {
    pub sample_seed: u64,
    /// Source trajectory ids with multiplicity, in draw order.
    pub drawn_ids: Vec<String>,
}

impl BootRecipe {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "sample_seed": self.sample_seed,
            "drawn_ids": self.drawn_ids,
        })
    }

    /// Re-create the bootstrap sample from the source dataset; errors if the
    /// source no longer matches the recorded draw.
    pub fn rebuild(&self, source: &Dataset) -> Result<Dataset> {
        let (ds, recipe) = boot_sample(source, self.sample_seed)?;
        if recipe.drawn_ids != self.drawn_ids {
            return Err(Error::NotFound(
                "source dataset does not reproduce the recorded bootstrap draw".into(),
            ));
        }
        Ok(ds)
    }
}

/// Draw a bootstrap sample: N complete trajectories selected uniformly with
/// replacement. Repeated draws of one trajectory are re-identified with
/// `id#k` suffixes (the first occurrence keeps the plain id) so partitions
/// over the sample remain well defined. Ground truth labels carry over.
pub fn boot_sample(ds: &Dataset, sample_seed: u64) -> Result<(Dataset, BootRecipe)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.n_trajectories();
    let mut rng = rng_for(sample_seed, "boot-draw", 0);
    let mut rows: Vec<(String, f64, f64)> = Vec::with_capacity(ds.n_observations());
    let mut truth: BTreeMap<String, String> = BTreeMap::new();
    let mut drawn_ids = Vec::with_capacity(n);
    let mut occurrence: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..n {
        let idx = rng.random_range(0..n);
        let traj = &ds.trajectories()[idx];
        drawn_ids.push(traj.id.clone());
        let count = occurrence.entry(idx).or_insert(0);
        *count += 1;
        let new_id = if *count == 1 {
            traj.id.clone()
        } else {
            format!("{}#{}", traj.id, *count)
        };
        for (&t, &v) in traj.times.iter().zip(&traj.values) {
            rows.push((new_id.clone(), t, v));
        }
        if let Some(label) = ds.truth().and_then(|tr| tr.label_of(&traj.id)) {
            truth.insert(new_id.clone(), label.to_string());
        }
    }
    let mut sample = Dataset::from_observations(rows, None)?;
    if ds.truth().is_some() {
        sample = sample.with_truth(GroundTruth::new(truth))?;
    }
    Ok((
        sample,
        BootRecipe {
            sample_seed,
            drawn_ids,
        },
    ))
}

/// One fit attempted by a harness run.
#[derive(Debug, Clone)]
pub struct FitEntry {
    pub name: String,
    pub spec: MethodSpec,
    pub seed: u64,
    pub recipe: Option<BootRecipe>,
    /// The model, or the error message of a failed fit.
    pub outcome: std::result::Result<ClusterModel, String>,
}

/// Ordered results of a batch, repetition, or bootstrap run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub entries: Vec<FitEntry>,
}

impl RunResult {
    /// Successful fits as a named model list, in submission order.
    pub fn models(&self) -> ModelList {
        let mut list = ModelList::new();
        for e in &self.entries {
            if let Ok(model) = &e.outcome {
                list.push(e.name.clone(), model.clone());
            }
        }
        list
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().filter_map(|e| match &e.outcome {
            Err(msg) => Some((e.name.as_str(), msg.as_str())),
            Ok(_) => None,
        })
    }

    /// Mean of the converged flags over successful fits.
    pub fn convergence_rate(&self) -> f64 {
        let models: Vec<_> = self
            .entries
            .iter()
            .filter_map(|e| e.outcome.as_ref().ok())
            .collect();
        if models.is_empty() {
            return f64::NAN;
        }
        models.iter().filter(|m| m.converged()).count() as f64 / models.len() as f64
    }

    /// Manifest JSON: one `{spec, seed, status, model_path, recipe?}` entry
    /// per fit. `model_path` supplies the written location, when any.
    pub fn manifest_value(
        &self,
        model_path: &dyn Fn(usize, &FitEntry) -> Option<String>,
    ) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut v = serde_json::json!({
                    "name": e.name,
                    "spec": e.spec.to_json_value(),
                    "seed": e.seed,
                    "status": match &e.outcome {
                        Ok(_) => "ok".to_string(),
                        Err(msg) => format!("error: {msg}"),
                    },
                    "model_path": model_path(i, e),
                });
                if let Some(recipe) = &e.recipe {
                    v["recipe"] = recipe.to_json_value();
                }
                v
            })
            .collect();
        serde_json::Value::Array(entries)
    }
}

/// Run `f` for indices `0..n`, optionally on a bounded worker pool. Results
/// are returned in index order regardless of scheduling.
pub(crate) fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if !parallel || n <= 1 {
        return (0..n).map(f).collect();
    }
    let workers = std::thread::available_parallelism()
        .map(|w| w.get())
        .unwrap_or(1)
        .min(n);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let result = f(i);
                slots.lock().expect("result collector poisoned")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result collector poisoned")
        .into_iter()
        .map(|slot| slot.expect("every index completed"))
        .collect()
}

fn run_entry(
    name: String,
    spec: &MethodSpec,
    ds: &Arc<Dataset>,
    seed: u64,
    recipe: Option<BootRecipe>,
) -> FitEntry {
    let outcome = estimate_shared(spec, ds, seed).map_err(|e| e.to_string());
    FitEntry {
        name,
        spec: spec.clone(),
        seed,
        recipe,
        outcome,
    }
}

/// Estimate a list of specifications on one dataset. Fit `i` uses the child
/// seed `(seed, "batch", i)`; failures are recorded as entries and the batch
/// continues.
pub fn run_batch(
    specs: &[MethodSpec],
    ds: &Dataset,
    seed: u64,
    parallel: bool,
) -> Result<RunResult> {
    if specs.is_empty() {
        return Err(Error::InvalidSpec("run_batch needs at least one spec".into()));
    }
    let shared = Arc::new(ds.clone());
    let entries = map_indexed(specs.len(), parallel, |i| {
        let child = child_seed(seed, "batch", i as u64);
        run_entry((i + 1).to_string(), &specs[i], &shared, child, None)
    });
    Ok(RunResult { entries })
}

/// Repeated estimation of one specification; fits differ only in their child
/// seed `(seed, "rep", i)`.
pub fn run_rep(
    spec: &MethodSpec,
    ds: &Dataset,
    reps: usize,
    seed: u64,
    parallel: bool,
) -> Result<RunResult> {
    if reps == 0 {
        return Err(Error::InvalidSpec("run_rep needs reps >= 1".into()));
    }
    let shared = Arc::new(ds.clone());
    let entries = map_indexed(reps, parallel, |i| {
        let child = child_seed(seed, "rep", i as u64);
        run_entry((i + 1).to_string(), spec, &shared, child, None)
    });
    Ok(RunResult { entries })
}

/// Bootstrap estimation: sample `i` is drawn with seed `(seed,
/// "boot-sample", i)` and fitted with `(seed, "boot-fit", i)`; each entry
/// carries its [`BootRecipe`].
pub fn run_boot(
    spec: &MethodSpec,
    ds: &Dataset,
    samples: usize,
    seed: u64,
    parallel: bool,
) -> Result<RunResult> {
    if samples == 0 {
        return Err(Error::InvalidSpec("run_boot needs samples >= 1".into()));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let entries = map_indexed(samples, parallel, |i| {
        let sample_seed = child_seed(seed, "boot-sample", i as u64);
        let fit_seed = child_seed(seed, "boot-fit", i as u64);
        match boot_sample(ds, sample_seed) {
            Ok((sample, recipe)) => run_entry(
                (i + 1).to_string(),
                spec,
                &Arc::new(sample),
                fit_seed,
                Some(recipe),
            ),
            Err(e) => FitEntry {
                name: (i + 1).to_string(),
                spec: spec.clone(),
                seed: fit_seed,
                recipe: None,
                outcome: Err(e.to_string()),
            },
        }
    });
    Ok(RunResult { entries })
}
