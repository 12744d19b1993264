//! Generic feature-based clustering: a named representation function maps the
//! dataset to one feature row per trajectory, and a named cluster function
//! maps the feature matrix to hard assignments.
//!
//! Both functions are looked up in process-wide registries so user code can
//! plug in custom steps; built-ins cover the common cases.

use std::collections::BTreeMap;
use std::sync::{Arc, LazyLock, RwLock};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::method::{
    ArgValue, CenterFn, ClusterLabels, FitContext, FitOutput, MethodBackend, MethodSpec,
    PreFitData, Predictor, Prepared,
};

use super::em::trajectory_designs;
use super::kmeans::kmeans;
use super::kml::hard_postprob;
use super::lmkm::trajectory_coefficients;

/// Maps a dataset to an N x P feature matrix (one row per trajectory, in
/// canonical id order).
pub type RepresentationFn = Arc<dyn Fn(&MethodSpec, &Dataset) -> Result<Vec<Vec<f64>>> + Send + Sync>;

/// Maps a feature matrix to one cluster index per row.
pub type ClusterStepFn =
    Arc<dyn Fn(&MethodSpec, &[Vec<f64>], u64) -> Result<Vec<usize>> + Send + Sync>;

static REPRESENTATIONS: LazyLock<RwLock<BTreeMap<String, RepresentationFn>>> =
    LazyLock::new(|| RwLock::new(builtin_representations()));
static CLUSTERERS: LazyLock<RwLock<BTreeMap<String, ClusterStepFn>>> =
    LazyLock::new(|| RwLock::new(builtin_clusterers()));

fn builtin_representations() -> BTreeMap<String, RepresentationFn> {
    let mut map: BTreeMap<String, RepresentationFn> = BTreeMap::new();
    map.insert(
        "coef".into(),
        Arc::new(|spec, ds| {
            let degree = spec.int("degree").unwrap_or(1).max(0) as usize;
            let designs = trajectory_designs(ds, degree);
            trajectory_coefficients(ds, &designs)
        }),
    );
    map.insert(
        "mean".into(),
        Arc::new(|_, ds| {
            Ok(ds
                .trajectories()
                .iter()
                .map(|t| vec![t.values.iter().sum::<f64>() / t.values.len() as f64])
                .collect())
        }),
    );
    map
}

fn builtin_clusterers() -> BTreeMap<String, ClusterStepFn> {
    let mut map: BTreeMap<String, ClusterStepFn> = BTreeMap::new();
    map.insert(
        "kmeans".into(),
        Arc::new(|spec, rows, seed| {
            let k = spec.n_clusters();
            let nstart = spec.int("nstart").unwrap_or(10).max(1) as usize;
            let max_iter = spec.int("maxIter").unwrap_or(50).max(1) as usize;
            Ok(kmeans(rows, k, nstart, max_iter, seed)?.assignments)
        }),
    );
    map.insert(
        "threshold".into(),
        Arc::new(|spec, rows, _| {
            let threshold = spec.real("threshold").unwrap_or(0.0);
            Ok(rows
                .iter()
                .map(|r| usize::from(r[0] > threshold))
                .collect())
        }),
    );
    map
}

/// Register (or replace) a representation step under `name`.
pub fn register_representation(name: &str, f: RepresentationFn) {
    REPRESENTATIONS
        .write()
        .expect("representation registry poisoned")
        .insert(name.to_string(), f);
}

/// Register (or replace) a cluster step under `name`.
pub fn register_clusterer(name: &str, f: ClusterStepFn) {
    CLUSTERERS
        .write()
        .expect("clusterer registry poisoned")
        .insert(name.to_string(), f);
}

fn representation(name: &str) -> Result<RepresentationFn> {
    REPRESENTATIONS
        .read()
        .expect("representation registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("representation `{name}` is not registered")))
}

fn clusterer(name: &str) -> Result<ClusterStepFn> {
    CLUSTERERS
        .read()
        .expect("clusterer registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("clusterer `{name}` is not registered")))
}

pub struct FeatureBackend;

impl MethodBackend for FeatureBackend {
    fn name(&self) -> &str {
        "feature"
    }

    fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
        vec![
            ("representation", ArgValue::Str("coef".into())),
            ("clusterer", ArgValue::Str("kmeans".into())),
            ("degree", ArgValue::Int(1)),
            ("nstart", ArgValue::Int(10)),
            ("maxIter", ArgValue::Int(50)),
            ("threshold", ArgValue::Real(0.0)),
            ("center", ArgValue::Str("mean".into())),
        ]
    }

    fn validate(&self, spec: &MethodSpec, _ds: &Dataset, _prepared: &Prepared) -> Result<()> {
        representation(spec.str_arg("representation").unwrap_or("coef"))?;
        clusterer(spec.str_arg("clusterer").unwrap_or("kmeans"))?;
        super::stratify::center_fn(spec)?;
        Ok(())
    }

    fn pre_fit(
        &self,
        spec: &MethodSpec,
        ds: &Dataset,
        _prepared: &Prepared,
        _seed: u64,
    ) -> Result<PreFitData> {
        let rep = representation(spec.str_arg("representation").unwrap_or("coef"))?;
        let rows = rep(spec, ds)?;
        if rows.len() != ds.n_trajectories() {
            return Err(Error::Contract(format!(
                "representation produced {} rows for {} trajectories",
                rows.len(),
                ds.n_trajectories()
            )));
        }
        let raw = rows.clone();
        Ok(PreFitData::Features { rows, raw })
    }

    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput> {
        let rows = match ctx.prefit {
            PreFitData::Features { rows, .. } => rows,
            _ => return Err(Error::InvalidSpec("feature expects feature rows".into())),
        };
        let cluster = clusterer(ctx.spec.str_arg("clusterer").unwrap_or("kmeans"))?;
        let assignments = cluster(ctx.spec, rows, ctx.seed)?;
        if assignments.len() != rows.len() {
            return Err(Error::Contract(format!(
                "clusterer produced {} assignments for {} rows",
                assignments.len(),
                rows.len()
            )));
        }
        let k = assignments.iter().copied().max().unwrap_or(0) + 1;
        let curves = crate::method::pointwise_center_curves(
            ctx.dataset,
            &assignments,
            k,
            ctx.spec
                .str_arg("center")
                .map(|_| super::stratify::center_fn(ctx.spec))
                .transpose()?
                .unwrap_or(CenterFn::Mean),
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
