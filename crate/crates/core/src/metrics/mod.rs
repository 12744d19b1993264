//! Named scalar metrics over fitted models, with extensible registries.
//!
//! Internal metrics map one model to a scalar; external metrics compare two
//! models. A metric value of `None` is the NA sentinel: it exports as an
//! empty CSV field and sorts last in model selection.

mod external;
mod internal;

pub use external::{
    adjusted_rand_index, split_join_distance, split_join_to_reference, wmmae, PairwiseExternal,
};
pub use internal::{average_silhouette_width, dunn_index};

use std::collections::BTreeMap;
use std::sync::{Arc, LazyLock, RwLock};

use crate::error::{Error, Result};
use crate::method::{ClusterModel, ModelList};

pub type InternalMetricFn = Arc<dyn Fn(&ClusterModel) -> Option<f64> + Send + Sync>;
pub type ExternalMetricFn =
    Arc<dyn Fn(&ClusterModel, &ClusterModel) -> Result<Option<f64>> + Send + Sync>;

static INTERNAL: LazyLock<RwLock<BTreeMap<String, InternalMetricFn>>> =
    LazyLock::new(|| RwLock::new(internal::builtins()));
static EXTERNAL: LazyLock<RwLock<BTreeMap<String, ExternalMetricFn>>> =
    LazyLock::new(|| RwLock::new(external::builtins()));

/// Register (or redefine) an internal metric.
pub fn define_internal_metric(name: &str, f: InternalMetricFn) {
    INTERNAL
        .write()
        .expect("internal metric registry poisoned")
        .insert(name.to_string(), f);
}

/// Register (or redefine) an external metric.
pub fn define_external_metric(name: &str, f: ExternalMetricFn) {
    EXTERNAL
        .write()
        .expect("external metric registry poisoned")
        .insert(name.to_string(), f);
}

/// Sorted names of the registered internal metrics.
pub fn internal_metric_names() -> Vec<String> {
    INTERNAL
        .read()
        .expect("internal metric registry poisoned")
        .keys()
        .cloned()
        .collect()
}

/// Sorted names of the registered external metrics.
pub fn external_metric_names() -> Vec<String> {
    EXTERNAL
        .read()
        .expect("external metric registry poisoned")
        .keys()
        .cloned()
        .collect()
}

/// Evaluate one internal metric; `Ok(None)` is NA.
pub fn internal_metric_value(model: &ClusterModel, name: &str) -> Result<Option<f64>> {
    let f = INTERNAL
        .read()
        .expect("internal metric registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownMetric(name.to_string()))?;
    Ok(f(model))
}

/// Evaluate several internal metrics, keyed by name.
pub fn internal_metric(
    model: &ClusterModel,
    names: &[&str],
) -> Result<BTreeMap<String, Option<f64>>> {
    let mut out = BTreeMap::new();
    for name in names {
        out.insert(name.to_string(), internal_metric_value(model, name)?);
    }
    Ok(out)
}

/// Evaluate one external metric between two models.
pub fn external_metric(a: &ClusterModel, b: &ClusterModel, name: &str) -> Result<Option<f64>> {
    let f = EXTERNAL
        .read()
        .expect("external metric registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownMetric(name.to_string()))?;
    f(a, b)
}

/// Evaluate an external metric over every unordered pair in the list.
/// Per-pair failures become NA cells and are reported with the pair names.
pub fn pairwise_external(models: &ModelList, name: &str) -> Result<PairwiseExternal> {
    if models.len() < 2 {
        return Err(Error::NotFound(
            "pairwise comparison needs at least two models".into(),
        ));
    }
    // Resolve once so an unknown metric fails the whole call.
    let f = EXTERNAL
        .read()
        .expect("external metric registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownMetric(name.to_string()))?;
    let entries: Vec<(&str, &ClusterModel)> = models.iter().collect();
    let mut values: Vec<Vec<Option<f64>>> = Vec::with_capacity(models.len());
    let mut failures = Vec::new();
    for (i, (name_i, model_i)) in entries.iter().enumerate() {
        let mut row = Vec::with_capacity(i);
        for (name_j, model_j) in entries.iter().take(i) {
            match f(model_j, model_i) {
                Ok(v) => row.push(v),
                Err(err) => {
                    failures.push((name_j.to_string(), name_i.to_string(), err.to_string()));
                    row.push(None);
                }
            }
        }
        values.push(row);
    }
    Ok(PairwiseExternal {
        names: entries.iter().map(|(n, _)| n.to_string()).collect(),
        values,
        failures,
    })
}
