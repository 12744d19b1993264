//! Longitudinal k-means: k-means applied directly to the time-aligned
//! observation matrix; cluster trajectories are the centroid rows.

use crate::dataset::{Dataset, ImputePolicy};
use crate::error::{Error, Result};
use crate::method::{
    ArgValue, ClusterLabels, Curve, FitContext, FitOutput, MethodBackend, MethodSpec, Predictor,
    Prepared,
};

use super::kmeans::kmeans;

pub(crate) fn impute_policy(spec: &MethodSpec) -> Result<ImputePolicy> {
    match spec.str_arg("impute").unwrap_or("copyMean") {
        "copyMean" => Ok(ImputePolicy::CopyMean),
        "fail" => Ok(ImputePolicy::FailOnMissing),
        other => Err(Error::InvalidSpec(format!(
            "unknown impute policy `{other}` (expected `copyMean` or `fail`)"
        ))),
    }
}

pub(crate) fn hard_postprob(assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    assignments
        .iter()
        .map(|&a| {
            let mut row = vec![0.0; k];
            row[a] = 1.0;
            row
        })
        .collect()
}

pub struct KmlBackend;

impl MethodBackend for KmlBackend {
    fn name(&self) -> &str {
        "kml"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![
            ("nstart", ArgValue::Int(20)),
            ("maxIter", ArgValue::Int(200)),
            ("impute", ArgValue::Str("copyMean".into())),
        ]
    }

    fn prepare(&self, spec: &MethodSpec, ds: &Dataset) -> Result<Prepared> {
        Ok(Prepared::Matrix(ds.aligned_matrix(impute_policy(spec)?)?))
    }

    fn validate(&self, spec: &MethodSpec, ds: &Dataset, prepared: &Prepared) -> Result<()> {
        let m = match prepared {
            Prepared::Matrix(m) => m,
            _ => return Err(Error::InvalidSpec("kml expects matrix data".into())),
        };
        if spec.n_clusters() > ds.n_trajectories() {
            return Err(Error::Infeasible(format!(
                "nClusters = {} exceeds {} trajectories",
                spec.n_clusters(),
                ds.n_trajectories()
            )));
        }
        debug_assert!(m.is_complete());
        Ok(())
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput> {
        let m = match ctx.prepared {
            Prepared::Matrix(m) => m,
            _ => return Err(Error::InvalidSpec("kml expects matrix data".into())),
        };
        let k = ctx.spec.n_clusters();
        let nstart = ctx.spec.int("nstart").unwrap_or(20).max(1) as usize;
        let max_iter = ctx.spec.int("maxIter").unwrap_or(200).max(1) as usize;
        let fit = kmeans(&m.values, k, nstart, max_iter, ctx.seed)?;
        let curves = fit
            .centers
            .iter()
            .map(|center| Curve {
                times: m.times.clone(),
                values: center.clone(),
            })
            .collect();
        Ok(FitOutput {
            postprob: hard_postprob(&fit.assignments, k),
            predictor: Predictor::Interpolated { curves },
            converged: fit.converged,
            log_likelihood: None,
            n_params: None,
            ll_trace: Vec::new(),
            labels: ClusterLabels::LettersByProportion,
        })
    }
}
