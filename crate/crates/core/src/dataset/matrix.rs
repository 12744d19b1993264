//! Time-aligned wide representation and the copy-mean imputation rule.

use crate::error::{Error, Result};

use super::Dataset;

/// How to treat missing cells when aligning a dataset to a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputePolicy {
    /// Fill gaps with the copy-mean rule (see [`TrajectoryMatrix::impute_copy_mean`]).
    CopyMean,
    /// Error out when any cell is missing.
    FailOnMissing,
}

/// N x J matrix of trajectory values on a shared, strictly increasing time
/// grid. `NaN` marks a missing cell; after imputation no `NaN` remains.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    pub ids: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TrajectoryMatrix {
    pub(super) fn align(ds: &Dataset, grid: &[f64], policy: ImputePolicy) -> Result<Self> {
        for w in grid.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Shape("grid must be strictly increasing".into()));
            }
        }
        let j = grid.len();
        let mut values = Vec::with_capacity(ds.n_trajectories());
        let mut ids = Vec::with_capacity(ds.n_trajectories());
        for traj in ds.trajectories() {
            let mut row = vec![f64::NAN; j];
            for (&t, &v) in traj.times.iter().zip(&traj.values) {
                let pos = grid
                    .binary_search_by(|g| g.partial_cmp(&t).unwrap())
                    .map_err(|_| Error::OffGrid {
                        id: traj.id.clone(),
                        time: t,
                    })?;
                row[pos] = v;
            }
            ids.push(traj.id.clone());
            values.push(row);
        }
        let m = Self {
            ids,
            times: grid.to_vec(),
            values,
        };
        match policy {
            ImputePolicy::FailOnMissing => {
                if let Some(row) = m.values.iter().position(|r| r.iter().any(|v| v.is_nan())) {
                    return Err(Error::MissingData {
                        id: m.ids[row].clone(),
                    });
                }
                Ok(m)
            }
            ImputePolicy::CopyMean => m.impute_copy_mean(),
        }
    }

    pub fn n_trajectories(&self) -> usize {
        self.values.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|r| r.iter().all(|v| !v.is_nan()))
    }

    /// Column means over observed cells.
    pub fn column_means(&self) -> Result<Vec<f64>> {
        let j = self.n_times();
        let mut sums = vec![0.0; j];
        let mut counts = vec![0usize; j];
        for row in &self.values {
            for (c, &v) in row.iter().enumerate() {
                if !v.is_nan() {
                    sums[c] += v;
                    counts[c] += 1;
                }
            }
        }
        for c in 0..j {
            if counts[c] == 0 {
                return Err(Error::Shape(format!(
                    "grid time {} has no observed values to impute from",
                    self.times[c]
                )));
            }
            sums[c] /= counts[c] as f64;
        }
        Ok(sums)
    }

    /// Copy-mean imputation. An interior gap at column `g` between the
    /// nearest observed columns `a < g < b` of row `i` is filled as
    ///
    /// ```text
    /// mean_g + d_a + (g - a) / (b - a) * (d_b - d_a),   d_x = y_ix - mean_x
    /// ```
    ///
    /// i.e. the column-mean shape shifted by the linear interpolation of the
    /// row's deviations at the flanking columns (index-based ratio). Leading
    /// and trailing gaps use the deviation of the nearest observed column.
    /// Observed cells are never modified, so the rule is idempotent.
    pub fn impute_copy_mean(&self) -> Result<Self> {
        if self.is_complete() {
            return Ok(self.clone());
        }
        let means = self.column_means()?;
        let mut out = self.clone();
        for (row, id) in out.values.iter_mut().zip(&self.ids) {
            let observed: Vec<usize> = (0..row.len()).filter(|&c| !row[c].is_nan()).collect();
            if observed.is_empty() {
                return Err(Error::Imputation {
                    id: id.clone(),
                    reason: "all observations missing".into(),
                });
            }
            for g in 0..row.len() {
                if !row[g].is_nan() {
                    continue;
                }
                let prev = observed.iter().rev().find(|&&c| c < g).copied();
                let next = observed.iter().find(|&&c| c > g).copied();
                let dev = |c: usize| row[c] - means[c];
                row[g] = match (prev, next) {
                    (Some(a), Some(b)) => {
                        let frac = (g - a) as f64 / (b - a) as f64;
                        means[g] + dev(a) + frac * (dev(b) - dev(a))
                    }
                    (None, Some(b)) => means[g] + dev(b),
                    (Some(a), None) => means[g] + dev(a),
                    (None, None) => unreachable!("observed is non-empty"),
                };
            }
        }
        Ok(out)
    }
}
