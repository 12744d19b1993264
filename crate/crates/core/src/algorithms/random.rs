//! Random partitioning: a null baseline that assigns each trajectory to a
//! uniformly random cluster.

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::method::{
    ArgValue, ClusterLabels, FitContext, FitOutput, MethodBackend, MethodSpec, Predictor, Prepared,
};
use crate::rng::rng_for;

use super::kml::hard_postprob;

pub struct RandomBackend;

impl MethodBackend for RandomBackend {
    fn name(&self) -> &str {
        "random"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![("center", ArgValue::Str("mean".into()))]
    }

    fn validate(&self, spec: &MethodSpec, ds: &Dataset, _prepared: &Prepared) -> Result<()> {
        if spec.n_clusters() > ds.n_trajectories() {
            return Err(Error::Infeasible(format!(
                "nClusters = {} exceeds {} trajectories",
                spec.n_clusters(),
                ds.n_trajectories()
            )));
        }
        super::stratify::center_fn(spec)?;
        Ok(())
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput> {
        let k = ctx.spec.n_clusters();
        let n = ctx.dataset.n_trajectories();
        let mut rng = rng_for(ctx.seed, "random-assign", 0);
        let assignments: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let curves = crate::method::pointwise_center_curves(
            ctx.dataset,
            &assignments,
            k,
            super::stratify::center_fn(ctx.spec)?,
        );
        Ok(FitOutput {
            postprob: hard_postprob(&assignments, k),
            predictor: Predictor::Interpolated { curves },
            converged: true,
            log_likelihood: None,
            n_params: None,
            ll_trace: Vec::new(),
            labels: ClusterLabels::LettersByProportion,
        })
    }
}
