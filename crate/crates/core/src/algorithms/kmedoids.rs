//! Distance-based clustering with partitioning around medoids (PAM).

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::method::{
    ArgValue, ClusterLabels, Curve, FitContext, FitOutput, MethodBackend, MethodSpec, PreFitData,
    Predictor, Prepared,
};

use super::distance::{dtw_distance_windowed, euclidean_distance, DistanceMatrix};
use super::kml::{hard_postprob, impute_policy};

/// Result of a PAM run.
#[derive(Debug, Clone)]
pub struct PamFit {
    pub medoids: Vec<usize>,
    pub assignments: Vec<usize>,
    pub total_cost: f64,
}

fn nearest_medoid(d: &DistanceMatrix, medoids: &[usize], i: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = d.get(i, medoids[0]);
    for (m, &mi) in medoids.iter().enumerate().skip(1) {
        let dist = d.get(i, mi);
        if dist < best_d {
            best_d = dist;
            best = m;
        }
    }
    (best, best_d)
}

fn total_cost(d: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..d.n()).map(|i| nearest_medoid(d, medoids, i).1).sum()
}

/// PAM: greedy BUILD, then best-improvement SWAP until no swap improves the
/// total cost. Deterministic; ties resolve to the lowest scanned index.
pub fn pam(d: &DistanceMatrix, k: usize) -> Result<PamFit> {
    let n = d.n();
    if k == 0 || k > n {
        return Err(Error::Infeasible(format!("k = {k} infeasible for {n} points")));
    }

    // BUILD: first medoid minimizes total distance, later medoids maximize
    // the cost reduction.
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let first = (0..n)
        .min_by(|&a, &b| {
            let ca: f64 = (0..n).map(|i| d.get(i, a)).sum();
            let cb: f64 = (0..n).map(|i| d.get(i, b)).sum();
            ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
        })
        .expect("n >= 1");
    medoids.push(first);
    while medoids.len() < k {
        let mut best_gain = f64::NEG_INFINITY;
        let mut best_cand = usize::MAX;
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            let mut gain = 0.0;
            for i in 0..n {
                let current = nearest_medoid(d, &medoids, i).1;
                let with_cand = d.get(i, cand);
                if with_cand < current {
                    gain += current - with_cand;
                }
            }
            if gain > best_gain {
                best_gain = gain;
                best_cand = cand;
            }
        }
        medoids.push(best_cand);
    }

    // SWAP: apply the single best strictly improving swap until none exists.
    let mut cost = total_cost(d, &medoids);
    loop {
        let mut best_delta = 0.0;
        let mut best_swap: Option<(usize, usize)> = None;
        for m in 0..k {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[m] = cand;
                let delta = total_cost(d, &trial) - cost;
                if delta < best_delta - 1e-15 {
                    best_delta = delta;
                    best_swap = Some((m, cand));
                }
            }
        }
        match best_swap {
            Some((m, cand)) => {
                medoids[m] = cand;
                cost += best_delta;
            }
            None => break,
        }
    }

    let cost = total_cost(d, &medoids);
    let assignments = (0..n).map(|i| nearest_medoid(d, &medoids, i).0).collect();
    Ok(PamFit {
        medoids,
        assignments,
        total_cost: cost,
    })
}

pub struct KmedoidsBackend;

impl MethodBackend for KmedoidsBackend {
    fn name(&self) -> &str {
        "kmedoids"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![
            ("distance", ArgValue::Str("euclidean".into())),
            ("window", ArgValue::Int(0)),
            ("distanceCap", ArgValue::Int(2048)),
            ("impute", ArgValue::Str("copyMean".into())),
        ]
    }

    fn prepare(&self, spec: &MethodSpec, ds: &Dataset) -> Result<Prepared> {
        match spec.str_arg("distance").unwrap_or("euclidean") {
            "euclidean" => Ok(Prepared::Matrix(ds.aligned_matrix(impute_policy(spec)?)?)),
            "dtw" => Ok(Prepared::Long),
            other => Err(Error::InvalidSpec(format!(
                "unknown distance `{other}` (expected `euclidean` or `dtw`)"
            ))),
        }
    }

    fn validate(&self, spec: &MethodSpec, ds: &Dataset, _prepared: &Prepared) -> Result<()> {
        let n = ds.n_trajectories();
        if spec.n_clusters() > n {
            return Err(Error::Infeasible(format!(
                "nClusters = {} exceeds {n} trajectories",
                spec.n_clusters()
            )));
        }
        let cap = spec.int("distanceCap").unwrap_or(2048).max(1) as usize;
        if n > cap {
            return Err(Error::Capacity { n, cap });
        }
        Ok(())
    }

    fn pre_fit(
        &self,
        spec: &MethodSpec,
        ds: &Dataset,
        prepared: &Prepared,
        _seed: u64,
    ) -> Result<PreFitData> {
        let n = ds.n_trajectories();
        let matrix = match prepared {
            Prepared::Matrix(m) => Some(m),
            _ => None,
        };
        let window = match spec.int("window").unwrap_or(0) {
            w if w > 0 => Some(w as usize),
            _ => None,
        };
        let dist = match matrix {
            Some(m) => DistanceMatrix::build(n, |i, j| {
                euclidean_distance(&m.values[i], &m.values[j])
            })?,
            None => {
                let trajs = ds.trajectories();
                DistanceMatrix::build(n, |i, j| {
                    dtw_distance_windowed(&trajs[i].values, &trajs[j].values, window)
                })?
            }
        };
        Ok(PreFitData::Distances(dist))
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput> {
        let d = match ctx.prefit {
            PreFitData::Distances(d) => d,
            _ => return Err(Error::InvalidSpec("kmedoids expects a distance matrix".into())),
        };
        let k = ctx.spec.n_clusters();
        let fit = pam(d, k)?;
        // Medoid trajectories as the cluster representation.
        let curves: Vec<Curve> = match ctx.prepared {
            Prepared::Matrix(m) => fit
                .medoids
                .iter()
                .map(|&mi| Curve {
                    times: m.times.clone(),
                    values: m.values[mi].clone(),
                })
                .collect(),
            _ => fit
                .medoids
                .iter()
                .map(|&mi| {
                    let traj = &ctx.dataset.trajectories()[mi];
                    Curve {
                        times: traj.times.clone(),
                        values: traj.values.clone(),
                    }
                })
                .collect(),
        };
        Ok(FitOutput {
            postprob: hard_postprob(&fit.assignments, k),
            predictor: Predictor::Interpolated { curves },
            converged: true,
            log_likelihood: None,
            n_params: None,
            ll_trace: Vec::new(),
            labels: ClusterLabels::LettersByProportion,
        })
    }
}
