//! Built-in internal metrics: residual errors, separation indices, and
//! likelihood criteria.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algorithms::{euclidean_distance, DistanceMatrix};
use crate::dataset::ImputePolicy;
use crate::method::ClusterModel;

use super::InternalMetricFn;

pub(super) fn builtins() -> BTreeMap<String, InternalMetricFn> {
    let mut map: BTreeMap<String, InternalMetricFn> = BTreeMap::new();
    map.insert("MAE".into(), Arc::new(mae));
    map.insert("RMSE".into(), Arc::new(rmse));
    map.insert("WMAE".into(), Arc::new(|m| weighted_error(m, false)));
    map.insert("WRMSE".into(), Arc::new(|m| weighted_error(m, true)));
    map.insert(
        "Dunn".into(),
        Arc::new(|m| trajectory_distances(m).and_then(|d| dunn_index(&d, &m.modal_assignments()))),
    );
    map.insert(
        "ASW".into(),
        Arc::new(|m| {
            trajectory_distances(m).and_then(|d| average_silhouette_width(&d, &m.modal_assignments()))
        }),
    );
    map.insert(
        "BIC".into(),
        Arc::new(|m| {
            let (ll, p) = (m.log_likelihood()?, m.n_params()?);
            Some(-2.0 * ll + p as f64 * (m.ids().len() as f64).ln())
        }),
    );
    map.insert(
        "AIC".into(),
        Arc::new(|m| {
            let (ll, p) = (m.log_likelihood()?, m.n_params()?);
            Some(-2.0 * ll + 2.0 * p as f64)
        }),
    );
    map.insert(
        "converged".into(),
        Arc::new(|m| Some(if m.converged() { 1.0 } else { 0.0 })),
    );
    map.insert(
        "estimationTime".into(),
        Arc::new(|m| Some(m.estimation_seconds())),
    );
    map
}

fn mae(m: &ClusterModel) -> Option<f64> {
    let resid = m.residuals().ok()?;
    if resid.is_empty() {
        return None;
    }
    Some(resid.iter().map(|r| r.abs()).sum::<f64>() / resid.len() as f64)
}

fn rmse(m: &ClusterModel) -> Option<f64> {
    let resid = m.residuals().ok()?;
    if resid.is_empty() {
        return None;
    }
    Some((resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt())
}

/// WMAE / WRMSE: per-observation errors against every cluster trajectory,
/// weighted by the trajectory's posterior probability, divided by the total
/// observation count. With hard assignments WMAE reduces exactly to MAE.
fn weighted_error(m: &ClusterModel, squared: bool) -> Option<f64> {
    let data = m.data()?.clone();
    let mut acc = 0.0;
    let mut count = 0usize;
    for (traj, row) in data.trajectories().iter().zip(m.postprob()) {
        count += traj.len();
        for (k, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (&t, &y) in traj.times.iter().zip(&traj.values) {
                let e = y - m.predictor().value_at(k, t);
                let term = if squared { e * e } else { e.abs() };
                // Avoid perturbing the exact MAE equality for unit weights.
                acc += if w == 1.0 { term } else { w * term };
            }
        }
    }
    if count == 0 {
        return None;
    }
    let mean = acc / count as f64;
    Some(if squared { mean.sqrt() } else { mean })
}

/// Euclidean distances between the rows of the imputed aligned matrix; the
/// shared geometry for Dunn and ASW across all model types.
fn trajectory_distances(m: &ClusterModel) -> Option<DistanceMatrix> {
    let data = m.data()?;
    let matrix = data.aligned_matrix(ImputePolicy::CopyMean).ok()?;
    DistanceMatrix::build(matrix.n_trajectories(), |i, j| {
        euclidean_distance(&matrix.values[i], &matrix.values[j])
    })
    .ok()
}

/// Dunn index: minimum single-linkage inter-cluster distance over the maximum
/// intra-cluster diameter. NA for fewer than two non-empty clusters or when
/// every diameter is zero.
pub fn dunn_index(d: &DistanceMatrix, assignments: &[usize]) -> Option<f64> {
    let k = assignments.iter().copied().max()? + 1;
    let occupied = (0..k).filter(|&c| assignments.contains(&c)).count();
    if occupied < 2 {
        return None;
    }
    let n = assignments.len();
    let mut min_between = f64::INFINITY;
    let mut max_within: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = d.get(i, j);
            if assignments[i] == assignments[j] {
                max_within = max_within.max(dist);
            } else {
                min_between = min_between.min(dist);
            }
        }
    }
    if max_within <= 0.0 {
        return None;
    }
    Some(min_between / max_within)
}

/// Mean silhouette width over all points. Points in singleton clusters score
/// zero. NA for fewer than two non-empty clusters.
pub fn average_silhouette_width(d: &DistanceMatrix, assignments: &[usize]) -> Option<f64> {
    let k = assignments.iter().copied().max()? + 1;
    let n = assignments.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if sizes[own] == 1 {
            continue; // s(i) = 0
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[assignments[j]] += d.get(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Some(total / n as f64)
}
