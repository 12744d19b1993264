//! Feature-based clustering with linear-regression coefficients: each
//! trajectory is represented by its polynomial OLS coefficients, which are
//! (optionally) standardized and clustered by k-means.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::NormalEq;
use crate::method::{
    ArgValue, ClusterLabels, FitContext, FitOutput, MethodBackend, MethodSpec, PreFitData,
    Predictor, Prepared, TrajDesign,
};

use super::em::trajectory_designs;
use super::kmeans::kmeans;
use super::kml::hard_postprob;

/// Per-trajectory OLS coefficients of the polynomial time design.
pub(crate) fn trajectory_coefficients(
    ds: &Dataset,
    designs: &[TrajDesign],
) -> Result<Vec<Vec<f64>>> {
    let b = designs[0].x.first().map(Vec::len).unwrap_or(0);
    designs
        .iter()
        .zip(ds.trajectories())
        .map(|(d, traj)| {
            let mut ne = NormalEq::new(b);
            for (x, &y) in d.x.iter().zip(&d.y) {
                ne.add(x, y, 1.0);
            }
            ne.try_solve().ok_or_else(|| Error::DegenerateTrajectory {
                id: traj.id.clone(),
                reason: format!("needs at least {b} distinct time points for the design"),
            })
        })
        .collect()
}

/// Column z-scores (sample standard deviation). Constant columns become zero.
pub(crate) fn standardize_columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let b = rows[0].len();
    let mut means = vec![0.0; b];
    for row in rows {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut sds = vec![0.0; b];
    for row in rows {
        for (c, v) in row.iter().enumerate() {
            sds[c] += (v - means[c]) * (v - means[c]);
        }
    }
    for sd in &mut sds {
        *sd = (*sd / (n as f64 - 1.0).max(1.0)).sqrt();
    }
    rows.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, v)| {
                    if sds[c] > 0.0 {
                        (v - means[c]) / sds[c]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub struct LmkmBackend;

impl MethodBackend for LmkmBackend {
    fn name(&self) -> &str {
        "lmkm"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![
            ("degree", ArgValue::Int(1)),
            ("standardize", ArgValue::Bool(true)),
            ("nstart", ArgValue::Int(10)),
            ("maxIter", ArgValue::Int(50)),
        ]
    }

    fn prepare(&self, spec: &MethodSpec, ds: &Dataset) -> Result<Prepared> {
        let degree = spec.int("degree").unwrap_or(1).max(0) as usize;
        Ok(Prepared::Designs(trajectory_designs(ds, degree)))
    }

    fn validate(&self, spec: &MethodSpec, ds: &Dataset, _prepared: &Prepared) -> Result<()> {
        if spec.n_clusters() > ds.n_trajectories() {
            return Err(Error::Infeasible(format!(
                "nClusters = {} exceeds {} trajectories",
                spec.n_clusters(),
                ds.n_trajectories()
            )));
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
        let designs = match prepared {
            Prepared::Designs(d) => d,
            _ => return Err(Error::InvalidSpec("lmkm expects design data".into())),
        };
        let raw = trajectory_coefficients(ds, designs)?;
        let rows = if spec.bool_arg("standardize").unwrap_or(true) {
            standardize_columns(&raw)
        } else {
            raw.clone()
        };
        Ok(PreFitData::Features { rows, raw })
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput> {
        let (rows, raw) = match ctx.prefit {
            PreFitData::Features { rows, raw } => (rows, raw),
            _ => return Err(Error::InvalidSpec("lmkm expects feature data".into())),
        };
        let k = ctx.spec.n_clusters();
        let nstart = ctx.spec.int("nstart").unwrap_or(10).max(1) as usize;
        let max_iter = ctx.spec.int("maxIter").unwrap_or(50).max(1) as usize;
        let fit = kmeans(rows, k, nstart, max_iter, ctx.seed)?;
        // Cluster trajectory = mean raw coefficient vector applied to the design.
        let b = raw[0].len();
        let mut coef = vec![vec![0.0; b]; k];
        let mut counts = vec![0usize; k];
        for (row, &a) in raw.iter().zip(&fit.assignments) {
            for (acc, v) in coef[a].iter_mut().zip(row) {
                *acc += v;
            }
            counts[a] += 1;
        }
        for (c, count) in counts.iter().enumerate() {
            if *count > 0 {
                for v in &mut coef[c] {
                    *v /= *count as f64;
                }
            } else {
                for v in &mut coef[c] {
                    *v = f64::NAN;
                }
            }
        }
        Ok(FitOutput {
            postprob: hard_postprob(&fit.assignments, k),
            predictor: Predictor::Polynomial { coef },
            converged: fit.converged,
            log_likelihood: None,
            n_params: None,
            ll_trace: Vec::new(),
            labels: ClusterLabels::LettersByProportion,
        })
    }
}
