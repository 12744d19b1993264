//! Longitudinal datasets: ingestion, validation, alignment, imputation,
//! and synthesis.
//!
//! A [`Dataset`] stores trajectories in canonical order: trajectory ids are
//! sorted with a numeric-aware comparison (integer ids numerically, all other
//! ids lexicographically) and observations within a trajectory are sorted by
//! time. Construction from shuffled input therefore yields an identical value,
//! and every backend is invariant to the input row order by construction.

mod csv_io;
mod matrix;
mod simulate;

pub use csv_io::{load_long_csv, read_long_csv, write_long_csv, LongColumns};
pub use matrix::{ImputePolicy, TrajectoryMatrix};
pub use simulate::{simulate_pap, simulate_pap_with, PapConfig, PapGroup};

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// One subject's repeated observations, time-sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    /// Number of observations J_i.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Reference cluster membership per trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    assignments: BTreeMap<String, String>,
    group_names: Vec<String>,
}

impl GroundTruth {
    pub fn new(assignments: BTreeMap<String, String>) -> Self {
        let mut names: Vec<String> = assignments.values().cloned().collect();
        names.sort();
        names.dedup();
        Self {
            assignments,
            group_names: names,
        }
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn label_of(&self, id: &str) -> Option<&str> {
        self.assignments.get(id).map(String::as_str)
    }

    pub fn assignments(&self) -> &BTreeMap<String, String> {
        &self.assignments
    }

    /// Check that every dataset id appears exactly once.
    pub fn validate_for(&self, ds: &Dataset) -> Result<()> {
        for id in ds.ids() {
            if !self.assignments.contains_key(id) {
                return Err(Error::Unassigned(id.to_string()));
            }
        }
        if self.assignments.len() != ds.n_trajectories() {
            return Err(Error::Shape(format!(
                "ground truth covers {} ids but the dataset has {} trajectories",
                self.assignments.len(),
                ds.n_trajectories()
            )));
        }
        Ok(())
    }
}

/// A long-format longitudinal dataset in canonical order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
    truth: Option<GroundTruth>,
}

/// Numeric-aware id ordering: unsigned-integer ids sort numerically ahead of
/// all other ids, which sort lexicographically. Total and input-order free.
pub(crate) fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

impl Dataset {
    /// Build a dataset from `(id, time, value)` rows, canonicalizing order.
    pub fn from_observations<I>(rows: I, truth: Option<BTreeMap<String, String>>) -> Result<Self>
    where
        I: IntoIterator<Item = (String, f64, f64)>,
    {
        let mut grouped: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for (id, t, v) in rows {
            if !t.is_finite() {
                return Err(Error::Shape(format!(
                    "non-finite time {t} for trajectory `{id}`"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Shape(format!(
                    "non-finite value {v} for trajectory `{id}` at time {t}"
                )));
            }
            grouped.entry(id).or_default().push((t, v));
        }
        let mut ids: Vec<String> = grouped.keys().cloned().collect();
        ids.sort_by(|a, b| compare_ids(a, b));

        let mut trajectories = Vec::with_capacity(ids.len());
        for id in ids {
            let mut obs = grouped.remove(&id).unwrap();
            obs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in obs.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::DuplicateObservation {
                        id: id.clone(),
                        time: w[0].0,
                    });
                }
            }
            let (times, values) = obs.into_iter().unzip();
            trajectories.push(Trajectory { id, times, values });
        }

        let ds = Self {
            trajectories,
            truth: None,
        };
        match truth {
            Some(map) => ds.with_truth(GroundTruth::new(map)),
            None => Ok(ds),
        }
    }

    /// Attach a ground truth, validating coverage.
    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        truth.validate_for(&self)?;
        self.truth = Some(truth);
        Ok(self)
    }

    /// Long-format dataset from an N x J matrix; `NaN` cells are missing and
    /// produce no observation.
    pub fn from_matrix(values: &[Vec<f64>], times: &[f64], ids: &[String]) -> Result<Self> {
        if values.len() != ids.len() {
            return Err(Error::Shape(format!(
                "{} value rows but {} ids",
                values.len(),
                ids.len()
            )));
        }
        let j = times.len();
        for w in times.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Shape("times must be strictly increasing".into()));
            }
        }
        let mut rows = Vec::new();
        for (row, id) in values.iter().zip(ids) {
            if row.len() != j {
                return Err(Error::Shape(format!(
                    "row for `{id}` has {} cells but the grid has {j} times",
                    row.len()
                )));
            }
            for (&t, &v) in times.iter().zip(row) {
                if !v.is_nan() {
                    rows.push((id.clone(), t, v));
                }
            }
        }
        Self::from_observations(rows, None)
    }

    pub fn n_trajectories(&self) -> usize {
        self.trajectories.len()
    }

    pub fn n_observations(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.trajectories.iter().map(|t| t.id.as_str())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.trajectories
            .binary_search_by(|t| compare_ids(&t.id, id))
            .ok()
    }

    pub fn truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    /// All observations in canonical order.
    pub fn observations(&self) -> impl Iterator<Item = (&str, f64, f64)> {
        self.trajectories.iter().flat_map(|t| {
            t.times
                .iter()
                .zip(&t.values)
                .map(move |(&time, &value)| (t.id.as_str(), time, value))
        })
    }

    /// Sorted union of all observed times.
    pub fn time_grid(&self) -> Vec<f64> {
        let mut grid: Vec<f64> = self
            .trajectories
            .iter()
            .flat_map(|t| t.times.iter().copied())
            .collect();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        grid
    }

    pub fn value_mean(&self) -> f64 {
        let n = self.n_observations();
        if n == 0 {
            return f64::NAN;
        }
        self.observations().map(|(_, _, v)| v).sum::<f64>() / n as f64
    }

    /// Time-aligned matrix over the union grid.
    pub fn aligned_matrix(&self, policy: ImputePolicy) -> Result<TrajectoryMatrix> {
        let grid = self.time_grid();
        self.aligned_on_grid(&grid, policy)
    }

    /// Time-aligned matrix over an explicit grid; every observed time must be
    /// on the grid.
    pub fn aligned_on_grid(&self, grid: &[f64], policy: ImputePolicy) -> Result<TrajectoryMatrix> {
        TrajectoryMatrix::align(self, grid, policy)
    }

    /// JSON export: `{ids, observations: [{id, time, value}], truth?}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Obs<'a> {
            id: &'a str,
            time: f64,
            value: f64,
        }
        let obs: Vec<Obs<'_>> = self
            .observations()
            .map(|(id, time, value)| Obs { id, time, value })
            .collect();
        let mut root = serde_json::json!({
            "ids": self.ids().collect::<Vec<_>>(),
            "observations": obs,
        });
        if let Some(truth) = &self.truth {
            root["truth"] = serde_json::json!(truth.assignments);
        }
        root
    }
}
