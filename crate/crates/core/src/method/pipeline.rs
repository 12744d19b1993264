//! The six-step estimation pipeline shared by every method.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::model::ClusterModel;
use super::registry::{self, ClusterLabels, FitContext};
use super::spec::MethodSpec;

/// Pipeline stages, emitted in order through the trace hook.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PrepareData,
    Compose,
    Validate,
    PreFit,
    Fit,
    PostFit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::PrepareData => "prepare",
            Stage::Compose => "compose",
            Stage::Validate => "validate",
            Stage::PreFit => "pre_fit",
            Stage::Fit => "fit",
            Stage::PostFit => "post_fit",
        };
        f.write_str(name)
    }
}

/// Estimate `spec` on `ds` with the given seed.
///
/// Deterministic: repeated calls with the same `(spec, dataset, seed)` return
/// models with identical posterior matrices, proportions, and predictors.
/// Fit-step non-convergence is reported through the model's `converged` flag,
/// not as an error.
pub fn estimate(spec: &MethodSpec, ds: &Dataset, seed: u64) -> Result<ClusterModel> {
    estimate_shared(spec, &Arc::new(ds.clone()), seed)
}

/// Like [`estimate`] but shares an existing `Arc` of the dataset instead of
/// cloning it; used by the harnesses.
pub fn estimate_shared(spec: &MethodSpec, ds: &Arc<Dataset>, seed: u64) -> Result<ClusterModel> {
    estimate_traced(spec, ds, seed, &mut |_| {})
}

/// [`estimate`] with a stage observer; the hook fires once per stage, in
/// pipeline order.
pub fn estimate_traced(
    spec: &MethodSpec,
    ds: &Arc<Dataset>,
    seed: u64,
    trace: &mut dyn FnMut(Stage),
) -> Result<ClusterModel> {
    let backend = registry::backend(spec.method())?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let known = registry::known_args(backend.as_ref());
    for key in spec.args().keys() {
        if !known.iter().any(|k| k == key) {
            return Err(Error::UnknownArgument {
                method: spec.method().to_string(),
                arg: key.clone(),
            });
        }
    }
    if spec.int("nClusters").map(|k| k < 1).unwrap_or(true) {
        return Err(Error::InvalidSpec(
            "nClusters must be an integer >= 1".into(),
        ));
    }

    trace(Stage::PrepareData);
    let prepared = backend.prepare(spec, ds)?;

    trace(Stage::Compose);
    let composed = backend.compose(spec)?;
    if composed.method() != spec.method() {
        return Err(Error::InvalidSpec(format!(
            "compose may rewrite arguments but not the method identity ({} -> {})",
            spec.method(),
            composed.method()
        )));
    }

    trace(Stage::Validate);
    backend.validate(&composed, ds, &prepared)?;

    trace(Stage::PreFit);
    let prefit = backend.pre_fit(&composed, ds, &prepared, seed)?;

    trace(Stage::Fit);
    let started = Instant::now();
    let out = backend.fit(&FitContext {
        spec: &composed,
        dataset: ds,
        prepared: &prepared,
        prefit: &prefit,
        seed,
    })?;
    let estimation_seconds = started.elapsed().as_secs_f64();

    trace(Stage::PostFit);
    let mut model = assemble_model(spec.clone(), ds, seed, estimation_seconds, out)?;
    backend.post_fit(&mut model)?;
    Ok(model)
}

/// Spreadsheet-style cluster letters: A..Z, AA, AB, ...
pub(crate) fn cluster_letters(k: usize) -> Vec<String> {
    (0..k)
        .map(|mut i| {
            let mut name = String::new();
            loop {
                name.insert(0, (b'A' + (i % 26) as u8) as char);
                if i < 26 {
                    break;
                }
                i = i / 26 - 1;
            }
            name
        })
        .collect()
}

/// Normalize, order, and name a fit result into a [`ClusterModel`].
pub(crate) fn assemble_model(
    spec: MethodSpec,
    ds: &Arc<Dataset>,
    seed: u64,
    estimation_seconds: f64,
    out: registry::FitOutput,
) -> Result<ClusterModel> {
    let n = ds.n_trajectories();
    let mut postprob = out.postprob;
    if postprob.len() != n {
        return Err(Error::Shape(format!(
            "fit produced {} posterior rows for {} trajectories",
            postprob.len(),
            n
        )));
    }
    let k = postprob.first().map(Vec::len).unwrap_or(0);
    if k == 0 {
        return Err(Error::Shape("fit produced zero clusters".into()));
    }
    for row in &mut postprob {
        if row.len() != k {
            return Err(Error::Shape("ragged posterior matrix".into()));
        }
        let mut sum = 0.0;
        for v in row.iter_mut() {
            if !v.is_finite() || *v < -1e-9 {
                return Err(Error::Shape(format!(
                    "posterior entry {v} outside [0, 1]"
                )));
            }
            *v = v.max(0.0);
            sum += *v;
        }
        if sum <= 0.0 {
            return Err(Error::Shape("posterior row sums to zero".into()));
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }

    let proportions = |pp: &Vec<Vec<f64>>| -> Vec<f64> {
        let mut p = vec![0.0; k];
        for row in pp {
            for (j, v) in row.iter().enumerate() {
                p[j] += v;
            }
        }
        for v in &mut p {
            *v /= n as f64;
        }
        p
    };

    let props = proportions(&postprob);
    let (order, names): (Vec<usize>, Vec<String>) = match out.labels {
        ClusterLabels::LettersByProportion => {
            let mut idx: Vec<usize> = (0..k).collect();
            // Decreasing proportion, stable on the original column for ties.
            idx.sort_by(|&a, &b| props[b].partial_cmp(&props[a]).unwrap().then(a.cmp(&b)));
            (idx, cluster_letters(k))
        }
        ClusterLabels::LettersInOrder => ((0..k).collect(), cluster_letters(k)),
        ClusterLabels::Named(names) => {
            if names.len() != k {
                return Err(Error::Shape(format!(
                    "{} cluster names for {k} clusters",
                    names.len()
                )));
            }
            ((0..k).collect(), names)
        }
    };

    let permuted: Vec<Vec<f64>> = postprob
        .iter()
        .map(|row| order.iter().map(|&j| row[j]).collect())
        .collect();
    let predictor = out.predictor.permuted(&order)?;
    let proportions = proportions(&permuted);

    ClusterModel::from_parts(
        spec,
        ds.clone(),
        names,
        permuted,
        proportions,
        predictor,
        seed,
        out.converged,
        estimation_seconds,
        out.log_likelihood,
        out.n_params,
        out.ll_trace,
    )
}
