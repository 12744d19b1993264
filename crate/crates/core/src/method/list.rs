//! Named, ordered collections of fitted models.

use crate::error::{Error, Result};
use crate::metrics;

use super::model::ClusterModel;
use super::spec::MethodSpec;

/// An ordered list of fitted models with per-entry names.
#[derive(Debug, Clone, Default)]
pub struct ModelList {
    entries: Vec<(String, ClusterModel)>,
}

impl ModelList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Auto-named list ("1", "2", ...).
    pub fn from_models(models: Vec<ClusterModel>) -> Self {
        Self {
            entries: models
                .into_iter()
                .enumerate()
                .map(|(i, m)| ((i + 1).to_string(), m))
                .collect(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, model: ClusterModel) {
        self.entries.push((name.into(), model));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn models(&self) -> impl Iterator<Item = &ClusterModel> {
        self.entries.iter().map(|(_, m)| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ClusterModel)> {
        self.entries.iter().map(|(n, m)| (n.as_str(), m))
    }

    pub fn get(&self, index: usize) -> Option<&ClusterModel> {
        self.entries.get(index).map(|(_, m)| m)
    }

    pub fn by_name(&self, name: &str) -> Option<&ClusterModel> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    /// Entries whose spec satisfies the predicate, preserving names and order.
    pub fn subset<F: Fn(&MethodSpec) -> bool>(&self, pred: F) -> ModelList {
        ModelList {
            entries: self
                .entries
                .iter()
                .filter(|(_, m)| pred(m.spec()))
                .cloned()
                .collect(),
        }
    }

    /// The single entry satisfying the predicate ("drop" semantics); an empty
    /// or ambiguous match is an error.
    pub fn subset_single<F: Fn(&MethodSpec) -> bool>(&self, pred: F) -> Result<&ClusterModel> {
        let mut found = None;
        for (name, m) in &self.entries {
            if pred(m.spec()) {
                if found.is_some() {
                    return Err(Error::NotFound(format!(
                        "more than one model matches (second: `{name}`)"
                    )));
                }
                found = Some(m);
            }
        }
        found.ok_or_else(|| Error::NotFound("no model matches the predicate".into()))
    }

    /// The entry maximizing the named internal metric. NA values sort last;
    /// an empty list or all-NA metric is an error.
    pub fn max_by(&self, metric: &str) -> Result<&ClusterModel> {
        if self.entries.is_empty() {
            return Err(Error::NotFound("empty model list".into()));
        }
        let mut best: Option<(&ClusterModel, f64)> = None;
        for (_, m) in &self.entries {
            let value = metrics::internal_metric_value(m, metric)?;
            if let Some(v) = value {
                match best {
                    Some((_, bv)) if bv >= v => {}
                    _ => best = Some((m, v)),
                }
            }
        }
        best.map(|(m, _)| m)
            .ok_or_else(|| Error::NotFound(format!("metric `{metric}` is NA for every model")))
    }
}

impl IntoIterator for ModelList {
    type Item = (String, ClusterModel);
    type IntoIter = std::vec::IntoIter<(String, ClusterModel)>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.into_iter()
    }
}
