//! Lloyd's k-means with seeded random restarts.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Result of one k-means run (the best restart).
#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub centers: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub within_ss: f64,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub ss_trace: Vec<f64>,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Run k-means over `nstart` seeded initializations and keep the solution
/// with the lowest within-cluster sum of squares. The first start is
/// deterministic (rows at the k mean-level quantiles), the rest draw k
/// distinct random rows; the fixed start anchors repeated fits on similar
/// data to the same basin. A cluster that empties during iteration is
/// reseeded to the point farthest from its current center.
pub fn kmeans(
    rows: &[Vec<f64>],
    k: usize,
    nstart: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KmeansFit> {
    let n = rows.len();
    if k == 0 {
        return Err(Error::Infeasible("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Infeasible(format!("k = {k} exceeds {n} rows")));
    }
    let mut best: Option<KmeansFit> = None;
    for start in 0..nstart.max(1) {
        let centers: Vec<Vec<f64>> = if start == 0 {
            quantile_rows(rows, k)
        } else {
            let mut rng = rng_for(seed, "kmeans-start", start as u64);
            // k distinct row indices by partial Fisher-Yates.
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            idx[..k].iter().map(|&i| rows[i].clone()).collect()
        };
        let fit = lloyd_from_centers(rows, centers, max_iter);
        let better = match &best {
            None => true,
            Some(b) => fit.within_ss < b.within_ss,
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("nstart >= 1"))
}

/// Rows at the k quantiles of the row-mean ordering (deterministic start).
fn quantile_rows(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mean = |i: usize| -> f64 { rows[i].iter().sum::<f64>() / rows[i].len().max(1) as f64 };
    order.sort_by(|&a, &b| mean(a).partial_cmp(&mean(b)).unwrap().then(a.cmp(&b)));
    (0..k)
        .map(|c| {
            let pos = ((c as f64 + 0.5) / k as f64 * n as f64).floor() as usize;
            rows[order[pos.min(n - 1)]].clone()
        })
        .collect()
}

/// Lloyd iterations from explicit initial centers.
pub fn lloyd_from_centers(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> KmeansFit {
    let n = rows.len();
    let k = centers.len();
    let dims = rows.first().map(Vec::len).unwrap_or(0);
    let mut assignments = vec![usize::MAX; n];
    let mut ss_trace = Vec::new();
    let mut converged = false;

    for _ in 0..max_iter.max(1) {
        // Assignment phase (nearest center, ties to the lowest index).
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let mut best = 0;
            let mut best_d = sq_dist(row, &centers[0]);
            for (c, center) in centers.iter().enumerate().skip(1) {
                let d = sq_dist(row, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }

        // Reseed empty clusters to the farthest point from its own center.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&rows[a], &centers[assignments[a]])
                        .partial_cmp(&sq_dist(&rows[b], &centers[assignments[b]]))
                        .unwrap()
                        .then(b.cmp(&a))
                });
            // Degenerate data (every candidate already on its center) cannot
            // fill the cluster; leave it empty for the diagnostics.
            if let Some(i) = far {
                if sq_dist(&rows[i], &centers[assignments[i]]) > 0.0 {
                    counts[assignments[i]] -= 1;
                    assignments[i] = c;
                    counts[c] = 1;
                    centers[c] = rows[i].clone();
                    reseeded = true;
                }
            }
        }

        // Update phase.
        let mut sums = vec![vec![0.0; dims]; k];
        for (row, &a) in rows.iter().zip(&assignments) {
            for (acc, v) in sums[a].iter_mut().zip(row) {
                *acc += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for v in &mut sums[c] {
                    *v /= counts[c] as f64;
                }
                centers[c] = std::mem::take(&mut sums[c]);
            }
        }

        let ss: f64 = rows
            .iter()
            .zip(&assignments)
            .map(|(row, &a)| sq_dist(row, &centers[a]))
            .sum();
        ss_trace.push(ss);

        if !changed && !reseeded {
            converged = true;
            break;
        }
    }

    let within_ss = *ss_trace.last().unwrap();
    KmeansFit {
        centers,
        assignments,
        within_ss,
        ss_trace,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_center_is_columnwise_mean() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 9.0]];
        let fit = kmeans(&rows, 1, 3, 50, 7).unwrap();
        assert!(fit.assignments.iter().all(|&a| a == 0));
        assert!((fit.centers[0][0] - 3.0).abs() < 1e-12);
        assert!((fit.centers[0][1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_two_well_separated_bundles() {
        let mut rows = Vec::new();
        for i in 0..10 {
            let jitter = (i as f64) * 0.01;
            rows.push(vec![0.0 + jitter, 0.1 - jitter]);
            rows.push(vec![10.0 - jitter, 10.0 + jitter]);
        }
        let fit = kmeans(&rows, 2, 5, 100, 3).unwrap();
        // Even indices together, odd indices together.
        let a0 = fit.assignments[0];
        let a1 = fit.assignments[1];
        assert_ne!(a0, a1);
        for (i, &a) in fit.assignments.iter().enumerate() {
            assert_eq!(a, if i % 2 == 0 { a0 } else { a1 });
        }
    }

    #[test]
    fn within_ss_never_increases() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 7) as f64, (i % 5) as f64 * 1.3])
            .collect();
        let fit = kmeans(&rows, 4, 1, 100, 11).unwrap();
        for w in fit.ss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "trace increased: {:?}", fit.ss_trace);
        }
    }

    #[test]
    fn infeasible_k() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            kmeans(&rows, 3, 1, 10, 0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64).sin() * 3.0, (i as f64).cos()])
            .collect();
        let a = kmeans(&rows, 3, 4, 100, 5).unwrap();
        let b = kmeans(&rows, 3, 4, 100, 5).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centers, b.centers);
    }
}
