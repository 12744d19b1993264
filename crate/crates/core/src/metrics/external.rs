//! Built-in external metrics: partition agreement and cluster-trajectory
//! similarity between two fitted models.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::method::ClusterModel;

use super::ExternalMetricFn;

/// Number of grid points used when comparing cluster trajectories.
const WMMAE_GRID: usize = 100;

/// Lower-triangular pairwise metric values: row `i` holds the pairs
/// `(names[j], names[i])` for `j < i`. Failed pairs become NA and are listed
/// in `failures` as `(name_a, name_b, message)`.
#[derive(Debug, Clone)]
pub struct PairwiseExternal {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub failures: Vec<(String, String, String)>,
}

impl PairwiseExternal {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.values[hi][lo]
    }

    /// All stored entries, flattened as `(i, j, value)` with `j < i`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Option<f64>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (i, j, *v)))
    }
}

pub(super) fn builtins() -> BTreeMap<String, ExternalMetricFn> {
    let mut map: BTreeMap<String, ExternalMetricFn> = BTreeMap::new();
    map.insert(
        "adjustedRand".into(),
        Arc::new(|a, b| {
            let (pa, pb) = modal_partitions(a, b)?;
            Ok(Some(adjusted_rand_index(&pa, &pb)))
        }),
    );
    map.insert(
        "splitJoin".into(),
        Arc::new(|a, b| {
            let (pa, pb) = modal_partitions(a, b)?;
            Ok(Some(split_join_distance(&pa, &pb)))
        }),
    );
    map.insert(
        "splitJoin.ref".into(),
        Arc::new(|a, b| {
            let (pa, pb) = modal_partitions(a, b)?;
            Ok(Some(split_join_to_reference(&pa, &pb)))
        }),
    );
    map.insert("WMMAE".into(), Arc::new(|a, b| wmmae(a, b).map(Some)));
    map
}

/// Modal partitions of two models over the same trajectory id set.
fn modal_partitions(a: &ClusterModel, b: &ClusterModel) -> Result<(Vec<usize>, Vec<usize>)> {
    if a.ids() != b.ids() {
        return Err(Error::IncompatiblePartition(format!(
            "trajectory id sets differ ({} vs {} ids)",
            a.ids().len(),
            b.ids().len()
        )));
    }
    Ok((a.modal_assignments(), b.modal_assignments()))
}

fn binom2(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index between two partitions.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().copied().max().map_or(0, |m| m + 1);
    let kb = b.iter().copied().max().map_or(0, |m| m + 1);
    let mut contingency = vec![vec![0usize; kb]; ka];
    let mut rows = vec![0usize; ka];
    let mut cols = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        contingency[x][y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let sum_cells: f64 = contingency
        .iter()
        .flatten()
        .map(|&c| binom2(c as f64))
        .sum();
    let sum_rows: f64 = rows.iter().map(|&c| binom2(c as f64)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| binom2(c as f64)).sum();
    let pairs = binom2(n as f64);
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = sum_rows * sum_cols / pairs;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() == 0.0 {
        1.0
    } else {
        (sum_cells - expected) / (max_index - expected)
    }
}

fn best_overlaps(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().copied().max().map_or(0, |m| m + 1);
    let kb = b.iter().copied().max().map_or(0, |m| m + 1);
    let mut contingency = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        contingency[x][y] += 1;
    }
    contingency
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0) as f64)
        .sum()
}

/// One-way split-join distance from partition `a` to reference `b`:
/// `n - sum_k max_k' |A_k intersect B_k'|`. Zero when every cluster of `a`
/// is a subset of some reference cluster.
pub fn split_join_to_reference(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.len() as f64 - best_overlaps(a, b)
}

/// Symmetric (van Dongen) split-join distance: the sum of both one-way
/// distances.
pub fn split_join_distance(a: &[usize], b: &[usize]) -> f64 {
    split_join_to_reference(a, b) + split_join_to_reference(b, a)
}

/// Weighted minimum mean absolute error between the cluster trajectories of
/// `a` and reference `b`, evaluated on a shared grid spanning the overlap of
/// their training time ranges. Weights are `a`'s cluster proportions; each of
/// `a`'s clusters is matched to its nearest reference cluster.
pub fn wmmae(a: &ClusterModel, b: &ClusterModel) -> Result<f64> {
    let range = |m: &ClusterModel| -> Result<(f64, f64)> {
        let times = m.training_times();
        match (times.first(), times.last()) {
            (Some(&lo), Some(&hi)) => Ok((lo, hi)),
            _ => Err(Error::IncompatiblePartition(
                "model has no training time range".into(),
            )),
        }
    };
    let (alo, ahi) = range(a)?;
    let (blo, bhi) = range(b)?;
    let lo = alo.max(blo);
    let hi = ahi.min(bhi);
    if lo > hi {
        return Err(Error::IncompatiblePartition(
            "training time ranges do not overlap".into(),
        ));
    }
    let grid: Vec<f64> = (0..WMMAE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (WMMAE_GRID - 1) as f64)
        .collect();
    let a_curves = a.cluster_trajectories(&grid);
    let b_curves = b.cluster_trajectories(&grid);
    let mut total = 0.0;
    for (k, curve) in a_curves.iter().enumerate() {
        let nearest = b_curves
            .iter()
            .map(|ref_curve| {
                curve
                    .iter()
                    .zip(ref_curve)
                    .map(|(x, y)| (x - y).abs())
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        total += a.proportions()[k] * nearest;
    }
    Ok(total / WMMAE_GRID as f64)
}
