//! Method registry and the backend contract.
//!
//! A backend implements the six estimation steps for one named method.
//! Built-ins are registered on first use; custom methods can be added at any
//! time with [`register_method`], which makes them available to
//! [`MethodSpec::new`](super::MethodSpec::new) and the estimation pipeline.

use std::collections::BTreeMap;
use std::sync::{Arc, LazyLock, RwLock};

use crate::dataset::{Dataset, TrajectoryMatrix};
use crate::error::{Error, Result};

use super::args::ArgValue;
use super::model::{ClusterModel, Predictor};
use super::spec::MethodSpec;

/// Output of the `prepare_data` step.
#[derive(Debug, Clone)]
pub enum Prepared {
    /// The long-format dataset is used as-is.
    Long,
    /// Time-aligned (and imputed) matrix.
    Matrix(TrajectoryMatrix),
    /// Per-trajectory regression designs.
    Designs(Vec<TrajDesign>),
}

/// Design bundle of one trajectory: rows of the polynomial time design and
/// the response vector.
#[derive(Debug, Clone)]
pub struct TrajDesign {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Output of the `pre_fit` step.
#[derive(Debug, Clone)]
pub enum PreFitData {
    None,
    /// Feature rows used for clustering plus the unstandardized rows kept for
    /// the cluster representation.
    Features {
        rows: Vec<Vec<f64>>,
        raw: Vec<Vec<f64>>,
    },
    /// Pairwise trajectory distances.
    Distances(crate::algorithms::DistanceMatrix),
    /// Stratum label per trajectory, plus label order.
    Strata {
        per_trajectory: Vec<String>,
        order: Vec<String>,
    },
}

/// Everything the `fit` step may use.
pub struct FitContext<'a> {
    pub spec: &'a MethodSpec,
    pub dataset: &'a Dataset,
    pub prepared: &'a Prepared,
    pub prefit: &'a PreFitData,
    pub seed: u64,
}

/// How the pipeline orders and names the fitted clusters.
#[derive(Debug, Clone)]
pub enum ClusterLabels {
    /// Reorder by decreasing proportion, then label "A", "B", ...
    LettersByProportion,
    /// Keep the fit's column order, label "A", "B", ...
    LettersInOrder,
    /// Keep the fit's column order with the given names.
    Named(Vec<String>),
}

/// The raw result of a `fit` step, before ordering and naming.
pub struct FitOutput {
    pub postprob: Vec<Vec<f64>>,
    pub predictor: Predictor,
    pub converged: bool,
    pub log_likelihood: Option<f64>,
    pub n_params: Option<usize>,
    pub ll_trace: Vec<f64>,
    pub labels: ClusterLabels,
}

impl FitOutput {
    pub fn hard(postprob: Vec<Vec<f64>>, predictor: Predictor, converged: bool) -> Self {
        Self {
            postprob,
            predictor,
            converged,
            log_likelihood: None,
            n_params: None,
            ll_trace: Vec::new(),
            labels: ClusterLabels::LettersByProportion,
        }
    }
}

/// A clustering method: defaults plus the six estimation steps. `fit` is the
/// only mandatory step; the others default to pass-through behavior.
pub trait MethodBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Default argument values beyond the base keys.
    fn defaults(&self) -> Vec<(&'static str, ArgValue)>;

    /// Transform the training data into the representation `fit` needs.
    fn prepare(&self, spec: &MethodSpec, ds: &Dataset) -> Result<Prepared> {
        let _ = (spec, ds);
        Ok(Prepared::Long)
    }

    /// Rewrite arguments for the remainder of the estimation. May not change
    /// the method identity.
    fn compose(&self, spec: &MethodSpec) -> Result<MethodSpec> {
        Ok(spec.clone())
    }

    /// Check evaluated arguments against the data.
    fn validate(&self, spec: &MethodSpec, ds: &Dataset, prepared: &Prepared) -> Result<()> {
        let _ = (spec, ds, prepared);
        Ok(())
    }

    /// Process inputs that should be computed once, before fitting.
    fn pre_fit(
        &self,
        spec: &MethodSpec,
        ds: &Dataset,
        prepared: &Prepared,
        seed: u64,
    ) -> Result<PreFitData> {
        let _ = (spec, ds, prepared, seed);
        Ok(PreFitData::None)
    }

    /// Estimate the method. The running time of this step is recorded as the
    /// model's estimation time.
    fn fit(&self, ctx: &FitContext<'_>) -> Result<FitOutput>;

    /// Post-process the assembled model.
    fn post_fit(&self, model: &mut ClusterModel) -> Result<()> {
        let _ = model;
        Ok(())
    }
}

type Registry = BTreeMap<String, Arc<dyn MethodBackend>>;

static METHODS: LazyLock<RwLock<Registry>> = LazyLock::new(|| RwLock::new(builtin_methods()));

fn builtin_methods() -> Registry {
    let mut map: Registry = BTreeMap::new();
    let builtins: Vec<Arc<dyn MethodBackend>> = vec![
        Arc::new(crate::algorithms::kml::KmlBackend),
        Arc::new(crate::algorithms::lmkm::LmkmBackend),
        Arc::new(crate::algorithms::gbtm::GbtmBackend),
        Arc::new(crate::algorithms::gmm::GmmBackend),
        Arc::new(crate::algorithms::kmedoids::KmedoidsBackend),
        Arc::new(crate::algorithms::stratify::StratifyBackend),
        Arc::new(crate::algorithms::random::RandomBackend),
        Arc::new(crate::algorithms::feature::FeatureBackend),
    ];
    for b in builtins {
        map.insert(b.name().to_string(), b);
    }
    map
}

/// Register (or replace) a method under `backend.name()`.
pub fn register_method(backend: Arc<dyn MethodBackend>) {
    METHODS
        .write()
        .expect("method registry poisoned")
        .insert(backend.name().to_string(), backend);
}

/// Sorted names of all registered methods.
pub fn method_names() -> Vec<String> {
    METHODS
        .read()
        .expect("method registry poisoned")
        .keys()
        .cloned()
        .collect()
}

pub(crate) fn backend(name: &str) -> Result<Arc<dyn MethodBackend>> {
    METHODS
        .read()
        .expect("method registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownMethod(name.to_string()))
}

/// The argument names a method accepts (base keys plus backend defaults).
pub(crate) fn known_args(b: &dyn MethodBackend) -> Vec<String> {
    let mut names: Vec<String> = super::spec::BASE_KEYS
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend(b.defaults().into_iter().map(|(k, _)| k.to_string()));
    names
}
