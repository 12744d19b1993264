//! Trajectory distances and the pairwise distance matrix.

use crate::error::{Error, Result};

/// Euclidean distance between equal-length series.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (y - x) * (y - x))
        .sum::<f64>()
        .sqrt())
}

/// Dynamic time warping distance: the classic dynamic program with local
/// cost `|a_i - b_j|`, unit-weight steps (up, left, diagonal), no window,
/// and no normalization.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    dtw_distance_windowed(a, b, None)
}

/// DTW with an optional Sakoe-Chiba band of half-width `window` on the index
/// difference; `None` means unconstrained.
pub fn dtw_distance_windowed(a: &[f64], b: &[f64], window: Option<usize>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Shape("dtw requires non-empty series".into()));
    }
    // A band narrower than the length difference has no valid path; widen it.
    let w = window
        .map(|w| w.max(a.len().abs_diff(b.len())))
        .unwrap_or(usize::MAX);
    let cols = b.len() + 1;
    let mut prev = vec![f64::INFINITY; cols];
    let mut curr = vec![f64::INFINITY; cols];
    prev[0] = 0.0;
    for i in 1..=a.len() {
        curr.fill(f64::INFINITY);
        let lo = i.saturating_sub(w).max(1);
        let hi = usize::min(b.len(), i.saturating_add(w));
        for j in lo..=hi {
            let cost = (a[i - 1] - b[j - 1]).abs();
            let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[b.len()])
}

/// Symmetric pairwise distances with a zero diagonal, stored condensed.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from a distance function evaluated once per unordered pair.
    pub fn build<F>(n: usize, mut dist: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let mut data = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                data.push(dist(i, j)?);
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.data[lo * self.n - lo * (lo + 1) / 2 + (hi - lo - 1)]
    }
}
