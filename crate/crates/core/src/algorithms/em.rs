//! Shared scaffolding for the EM backends: random soft starts, the restart
//! driver, and per-trajectory design construction.

use rand::Rng;

use crate::dataset::Dataset;
use crate::linalg::design_row;
use crate::method::TrajDesign;
use crate::rng::{rng_for, SeededRng};

/// Variance floor below which a restart is considered collapsed.
pub(crate) const VAR_FLOOR: f64 = 1e-10;

/// One restart's outcome.
pub(crate) struct EmRun<P> {
    pub params: P,
    pub postprob: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub collapsed: bool,
}

/// Random soft assignments: each row drawn from Dirichlet(1, ..., 1).
pub(crate) fn random_soft_rows(n: usize, k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..k)
                .map(|_| -f64::ln(1.0 - rng.random_range(0.0..1.0)))
                .collect();
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v /= sum;
            }
            row
        })
        .collect()
}

/// Run `restarts` seeded EM starts and keep the best final log-likelihood.
/// Collapsed restarts lose to any non-collapsed restart; if every restart
/// collapses, the best collapsed run is returned with `converged = false`.
pub(crate) fn best_of_restarts<P, F>(restarts: usize, seed: u64, run_one: F) -> EmRun<P>
where
    F: Fn(SeededRng) -> EmRun<P>,
{
    let mut best: Option<EmRun<P>> = None;
    for r in 0..restarts.max(1) {
        let rng = rng_for(seed, "em-start", r as u64);
        let candidate = run_one(rng);
        let better = match &best {
            None => true,
            Some(b) => match (b.collapsed, candidate.collapsed) {
                (true, false) => true,
                (false, true) => false,
                _ => candidate.log_likelihood > b.log_likelihood,
            },
        };
        if better {
            best = Some(candidate);
        }
    }
    let mut best = best.expect("restarts >= 1");
    if best.collapsed {
        best.converged = false;
    }
    best
}

/// Per-trajectory polynomial designs for the regression backends.
pub(crate) fn trajectory_designs(ds: &Dataset, degree: usize) -> Vec<TrajDesign> {
    ds.trajectories()
        .iter()
        .map(|traj| TrajDesign {
            x: traj.times.iter().map(|&t| design_row(t, degree)).collect(),
            y: traj.values.clone(),
        })
        .collect()
}

/// Gaussian log-density with variance `s2`.
#[inline]
pub(crate) fn normal_logpdf(resid: f64, s2: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + resid * resid / s2)
}
