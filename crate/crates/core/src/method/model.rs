//! The uniform fitted-model interface.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::rng_for;

use super::registry::{ClusterLabels, FitOutput};
use super::spec::MethodSpec;

/// One cluster's representative curve on its own time support.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    /// Linear interpolation, clamped to the endpoints outside the support.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.times.is_empty() {
            return f64::NAN;
        }
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        if t <= first {
            return self.values[0];
        }
        if t >= last {
            return *self.values.last().unwrap();
        }
        match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => self.values[i],
            Err(i) => {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                v0 + (t - t0) / (t1 - t0) * (v1 - v0)
            }
        }
    }
}

/// Per-cluster trajectory function.
///
/// Center-based predictors interpolate linearly and clamp beyond their
/// support; parametric predictors extrapolate.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Interpolated { curves: Vec<Curve> },
    Polynomial { coef: Vec<Vec<f64>> },
}

impl Predictor {
    pub fn k(&self) -> usize {
        match self {
            Predictor::Interpolated { curves } => curves.len(),
            Predictor::Polynomial { coef } => coef.len(),
        }
    }

    /// Value of cluster `k`'s trajectory at time `t`.
    pub fn value_at(&self, k: usize, t: f64) -> f64 {
        match self {
            Predictor::Interpolated { curves } => curves[k].value_at(t),
            Predictor::Polynomial { coef } => {
                linalg::dot(&coef[k], &linalg::design_row(t, coef[k].len() - 1))
            }
        }
    }

    pub(crate) fn permuted(self, order: &[usize]) -> Result<Predictor> {
        if order.len() != self.k() {
            return Err(Error::Shape(format!(
                "predictor has {} clusters but the order has {}",
                self.k(),
                order.len()
            )));
        }
        Ok(match self {
            Predictor::Interpolated { curves } => Predictor::Interpolated {
                curves: order.iter().map(|&j| curves[j].clone()).collect(),
            },
            Predictor::Polynomial { coef } => Predictor::Polynomial {
                coef: order.iter().map(|&j| coef[j].clone()).collect(),
            },
        })
    }
}

/// Strategy for turning posterior probabilities into hard assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignStrategy {
    /// Highest posterior probability, breaking exact ties at random.
    Modal,
    /// Sample a cluster per trajectory with that row's probabilities.
    WeightedRandom,
}

/// Pointwise center used by partition-style cluster representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterFn {
    Mean,
    Median,
}

impl CenterFn {
    fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            CenterFn::Mean => values.iter().sum::<f64>() / values.len() as f64,
            CenterFn::Median => {
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

/// A fitted cluster solution: posterior probabilities, proportions, cluster
/// names, a per-cluster predictor, and estimation provenance.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    spec: MethodSpec,
    ids: Vec<String>,
    cluster_names: Vec<String>,
    postprob: Vec<Vec<f64>>,
    proportions: Vec<f64>,
    predictor: Predictor,
    training_times: Vec<f64>,
    seed: u64,
    converged: bool,
    estimation_seconds: f64,
    log_likelihood: Option<f64>,
    n_params: Option<usize>,
    ll_trace: Vec<f64>,
    has_empty_clusters: bool,
    tag: Option<String>,
    data: Option<Arc<Dataset>>,
}

impl ClusterModel {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        spec: MethodSpec,
        data: Arc<Dataset>,
        cluster_names: Vec<String>,
        postprob: Vec<Vec<f64>>,
        proportions: Vec<f64>,
        predictor: Predictor,
        seed: u64,
        converged: bool,
        estimation_seconds: f64,
        log_likelihood: Option<f64>,
        n_params: Option<usize>,
        ll_trace: Vec<f64>,
    ) -> Result<Self> {
        let k = cluster_names.len();
        if predictor.k() != k || proportions.len() != k {
            return Err(Error::Shape("inconsistent cluster count".into()));
        }
        let ids: Vec<String> = data.ids().map(str::to_string).collect();
        let training_times = data.time_grid();
        let mut model = Self {
            spec,
            ids,
            cluster_names,
            postprob,
            proportions,
            predictor,
            training_times,
            seed,
            converged,
            estimation_seconds,
            log_likelihood,
            n_params,
            ll_trace,
            has_empty_clusters: false,
            tag: None,
            data: Some(data),
        };
        model.refresh_empty_flag();
        Ok(model)
    }

    fn refresh_empty_flag(&mut self) {
        let mut seen = vec![false; self.k()];
        for &a in &self.modal_assignments() {
            seen[a] = true;
        }
        self.has_empty_clusters = seen.iter().any(|s| !s);
    }

    pub fn k(&self) -> usize {
        self.cluster_names.len()
    }

    pub fn spec(&self) -> &MethodSpec {
        &self.spec
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn cluster_names(&self) -> &[String] {
        &self.cluster_names
    }

    /// N x K row-stochastic posterior probability matrix.
    pub fn postprob(&self) -> &[Vec<f64>] {
        &self.postprob
    }

    /// Cluster proportions: column means of the posterior matrix.
    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    /// Sorted union of the training observation times.
    pub fn training_times(&self) -> &[f64] {
        &self.training_times
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn estimation_seconds(&self) -> f64 {
        self.estimation_seconds
    }

    pub fn log_likelihood(&self) -> Option<f64> {
        self.log_likelihood
    }

    pub fn n_params(&self) -> Option<usize> {
        self.n_params
    }

    /// Log-likelihood after each EM iteration of the winning restart; empty
    /// for non-likelihood methods.
    pub fn ll_trace(&self) -> &[f64] {
        &self.ll_trace
    }

    /// True when some cluster has no trajectories under modal assignment.
    pub fn has_empty_clusters(&self) -> bool {
        self.has_empty_clusters
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn set_tag(&mut self, tag: impl Into<String>) {
        self.tag = Some(tag.into());
    }

    /// The training data, when this model was fitted in-process.
    pub fn data(&self) -> Option<&Arc<Dataset>> {
        self.data.as_ref()
    }

    /// Replace the cluster names (keeps order).
    pub fn rename_clusters<S: Into<String>>(&mut self, names: Vec<S>) -> Result<()> {
        if names.len() != self.k() {
            return Err(Error::Shape(format!(
                "{} names for {} clusters",
                names.len(),
                self.k()
            )));
        }
        self.cluster_names = names.into_iter().map(Into::into).collect();
        Ok(())
    }

    /// Deterministic modal assignment (ties resolved to the lowest index).
    pub fn modal_assignments(&self) -> Vec<usize> {
        self.postprob
            .iter()
            .map(|row| {
                let mut best = 0;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    /// Trajectory-to-cluster map under the given strategy.
    ///
    /// `Modal` breaks exact posterior ties uniformly at random from the
    /// seeded stream; `WeightedRandom` samples each trajectory's cluster with
    /// its posterior row as weights.
    pub fn trajectory_assignments(
        &self,
        strategy: AssignStrategy,
        seed: u64,
    ) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        match strategy {
            AssignStrategy::Modal => {
                let mut rng = rng_for(seed, "tie-break", 0);
                for (id, row) in self.ids.iter().zip(&self.postprob) {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let ties: Vec<usize> = (0..row.len()).filter(|&j| row[j] == max).collect();
                    let pick = if ties.len() == 1 {
                        ties[0]
                    } else {
                        ties[rng.random_range(0..ties.len())]
                    };
                    out.insert(id.clone(), pick);
                }
            }
            AssignStrategy::WeightedRandom => {
                let mut rng = rng_for(seed, "weighted-assign", 0);
                for (id, row) in self.ids.iter().zip(&self.postprob) {
                    let u: f64 = rng.random_range(0.0..1.0);
                    let mut acc = 0.0;
                    let mut pick = row.len() - 1;
                    for (j, p) in row.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = j;
                            break;
                        }
                    }
                    out.insert(id.clone(), pick);
                }
            }
        }
        out
    }

    /// Cluster sizes under deterministic modal assignment.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k()];
        for a in self.modal_assignments() {
            sizes[a] += 1;
        }
        sizes
    }

    /// Each cluster's trajectory evaluated at `times` (K x len(times)).
    pub fn cluster_trajectories(&self, times: &[f64]) -> Vec<Vec<f64>> {
        (0..self.k())
            .map(|k| times.iter().map(|&t| self.predictor.value_at(k, t)).collect())
            .collect()
    }

    /// Predicted response for every observation of `ds`, conditional on
    /// cluster `k`.
    pub fn predict_for_cluster(&self, ds: &Dataset, k: usize) -> Result<Vec<f64>> {
        if k >= self.k() {
            return Err(Error::ClusterIndex {
                index: k,
                k: self.k(),
            });
        }
        Ok(ds
            .observations()
            .map(|(_, t, _)| self.predictor.value_at(k, t))
            .collect())
    }

    /// Fitted values under each trajectory's modal cluster, aligned with the
    /// training observations in canonical order.
    pub fn fitted(&self) -> Result<Vec<f64>> {
        let data = self.data.as_ref().ok_or(Error::NoTrainingData)?;
        let modal = self.modal_assignments();
        let mut out = Vec::with_capacity(data.n_observations());
        for (traj, &k) in data.trajectories().iter().zip(&modal) {
            for &t in &traj.times {
                out.push(self.predictor.value_at(k, t));
            }
        }
        Ok(out)
    }

    /// Observed minus fitted, aligned with the training observations.
    pub fn residuals(&self) -> Result<Vec<f64>> {
        let data = self.data.as_ref().ok_or(Error::NoTrainingData)?;
        let fitted = self.fitted()?;
        Ok(data
            .observations()
            .zip(fitted)
            .map(|((_, _, y), f)| y - f)
            .collect())
    }

    /// Multi-line text summary of the solution.
    pub fn summary(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "Longitudinal cluster model using {}", self.spec.method());
        let _ = write!(s, "{}", self.spec);
        let _ = writeln!(s, "Cluster sizes (K={}):", self.k());
        let sizes = self.cluster_sizes();
        let n = self.ids.len().max(1);
        let line = self
            .cluster_names
            .iter()
            .zip(&sizes)
            .map(|(name, &c)| format!("{name} {c} ({:.1}%)", 100.0 * c as f64 / n as f64))
            .collect::<Vec<_>>()
            .join("  ");
        let _ = writeln!(s, "  {line}");
        if let Some(data) = &self.data {
            let _ = writeln!(
                s,
                "Number of obs: {}, strata ({}): {}",
                data.n_observations(),
                self.spec.id_name(),
                data.n_trajectories()
            );
            if let Ok(resid) = self.residuals() {
                if !resid.is_empty() {
                    let scaled = scale_residuals(&resid);
                    let q = |p: f64| quantile_type7(&scaled, p);
                    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
                    let _ = writeln!(s, "Scaled residuals:");
                    let _ = writeln!(
                        s,
                        "  Min. {:.4}  1st Qu. {:.4}  Median {:.4}  Mean {:.4}  3rd Qu. {:.4}  Max. {:.4}",
                        q(0.0), q(0.25), q(0.5), mean, q(0.75), q(1.0)
                    );
                }
            }
        }
        if let Some(ll) = self.log_likelihood {
            let _ = writeln!(s, "Log-likelihood: {ll:.4}");
        }
        let _ = writeln!(s, "Converged: {}", self.converged);
        s
    }

    /// Model JSON export. `include_timing` controls whether the measured
    /// estimation time is embedded; the default export zeroes it so repeated
    /// runs produce byte-identical files.
    pub fn to_json_value(&self, include_timing: bool) -> serde_json::Value {
        let samples: Vec<Vec<f64>> = self.cluster_trajectories(&self.training_times);
        let mut root = serde_json::json!({
            "method": self.spec.method(),
            "args": self.spec.to_json_value()["args"],
            "seed": self.seed,
            "converged": self.converged,
            "estimation_seconds": if include_timing { self.estimation_seconds } else { 0.0 },
            "cluster_names": self.cluster_names,
            "proportions": self.proportions,
            "ids": self.ids,
            "postprob": self.postprob,
            "predictor_samples": {
                "times": self.training_times,
                "values": samples,
            },
        });
        if let Some(ll) = self.log_likelihood {
            root["log_likelihood"] = serde_json::json!(ll);
        }
        if let Some(p) = self.n_params {
            root["n_params"] = serde_json::json!(p);
        }
        if let Some(tag) = &self.tag {
            root["tag"] = serde_json::json!(tag);
        }
        root
    }

    pub fn to_json_string(&self, include_timing: bool) -> String {
        serde_json::to_string_pretty(&self.to_json_value(include_timing))
            .expect("model json serializes")
    }

    /// Rebuild a model from its JSON export. The result carries no training
    /// data, so data-dependent metrics evaluate to NA; the predictor is the
    /// exported sample grid with linear interpolation.
    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let spec = MethodSpec::from_json_value(value)?;
        let get = |k: &str| {
            value
                .get(k)
                .ok_or_else(|| Error::InvalidSpec(format!("model json is missing `{k}`")))
        };
        let ids: Vec<String> = serde_json::from_value(get("ids")?.clone())?;
        let cluster_names: Vec<String> = serde_json::from_value(get("cluster_names")?.clone())?;
        let postprob: Vec<Vec<f64>> = serde_json::from_value(get("postprob")?.clone())?;
        let proportions: Vec<f64> = serde_json::from_value(get("proportions")?.clone())?;
        let samples = get("predictor_samples")?;
        let times: Vec<f64> = serde_json::from_value(
            samples
                .get("times")
                .cloned()
                .ok_or_else(|| Error::InvalidSpec("predictor_samples missing `times`".into()))?,
        )?;
        let values: Vec<Vec<f64>> = serde_json::from_value(
            samples
                .get("values")
                .cloned()
                .ok_or_else(|| Error::InvalidSpec("predictor_samples missing `values`".into()))?,
        )?;
        let k = cluster_names.len();
        if postprob.iter().any(|r| r.len() != k) || proportions.len() != k || values.len() != k {
            return Err(Error::Shape("inconsistent cluster count in model json".into()));
        }
        if postprob.len() != ids.len() {
            return Err(Error::Shape("posterior rows do not match ids".into()));
        }
        let curves = values
            .into_iter()
            .map(|v| {
                if v.len() != times.len() {
                    return Err(Error::Shape("ragged predictor samples".into()));
                }
                Ok(Curve {
                    times: times.clone(),
                    values: v,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self {
            spec,
            ids,
            cluster_names,
            postprob,
            proportions,
            predictor: Predictor::Interpolated { curves },
            training_times: times,
            seed: value.get("seed").and_then(|v| v.as_u64()).unwrap_or(0),
            converged: value
                .get("converged")
                .and_then(|v| v.as_bool())
                .unwrap_or(true),
            estimation_seconds: value
                .get("estimation_seconds")
                .and_then(|v| v.as_f64())
                .unwrap_or(0.0),
            log_likelihood: value.get("log_likelihood").and_then(|v| v.as_f64()),
            n_params: value
                .get("n_params")
                .and_then(|v| v.as_u64())
                .map(|v| v as usize),
            ll_trace: Vec::new(),
            has_empty_clusters: false,
            tag: value
                .get("tag")
                .and_then(|v| v.as_str())
                .map(str::to_string),
            data: None,
        };
        model.refresh_empty_flag();
        Ok(model)
    }
}

fn scale_residuals(resid: &[f64]) -> Vec<f64> {
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let var = resid.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    if sd <= 0.0 {
        return resid.iter().map(|r| r - mean).collect();
    }
    resid.iter().map(|r| (r - mean) / sd).collect()
}

/// R-style type-7 sample quantile.
pub fn quantile_type7(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise per-cluster center curves over the dataset grid.
///
/// A cluster's curve covers the grid times at which at least one member is
/// observed; an empty cluster yields an empty curve (its predictor is NaN).
pub(crate) fn pointwise_center_curves(
    ds: &Dataset,
    assignments: &[usize],
    k: usize,
    center: CenterFn,
) -> Vec<Curve> {
    let grid = ds.time_grid();
    let mut per_cluster_time: Vec<BTreeMap<usize, Vec<f64>>> = vec![BTreeMap::new(); k];
    for (traj, &a) in ds.trajectories().iter().zip(assignments) {
        for (&t, &v) in traj.times.iter().zip(&traj.values) {
            let gi = grid
                .binary_search_by(|g| g.partial_cmp(&t).unwrap())
                .expect("observed time on own grid");
            per_cluster_time[a].entry(gi).or_default().push(v);
        }
    }
    per_cluster_time
        .into_iter()
        .map(|by_time| {
            let mut times = Vec::with_capacity(by_time.len());
            let mut values = Vec::with_capacity(by_time.len());
            for (gi, mut vs) in by_time {
                times.push(grid[gi]);
                values.push(center.apply(&mut vs));
            }
            Curve { times, values }
        })
        .collect()
}

/// Build a hard-assignment model directly from per-trajectory labels.
///
/// Cluster names are the distinct labels in sorted order; the cluster
/// representation is the pointwise `center` of the member trajectories with
/// linear interpolation.
pub fn partition_model(
    ds: &Dataset,
    assignments: &BTreeMap<String, String>,
    center: CenterFn,
) -> Result<ClusterModel> {
    let mut labels: Vec<String> = assignments.values().cloned().collect();
    labels.sort();
    labels.dedup();
    partition_model_ordered(ds, assignments, labels, center)
}

/// [`partition_model`] with an explicit cluster-label order.
pub fn partition_model_ordered(
    ds: &Dataset,
    assignments: &BTreeMap<String, String>,
    label_order: Vec<String>,
    center: CenterFn,
) -> Result<ClusterModel> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let index_of: BTreeMap<&str, usize> = label_order
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let k = label_order.len();
    let mut assign_idx = Vec::with_capacity(ds.n_trajectories());
    for id in ds.ids() {
        let label = assignments
            .get(id)
            .ok_or_else(|| Error::Unassigned(id.to_string()))?;
        let idx = index_of
            .get(label.as_str())
            .ok_or_else(|| Error::NotFound(format!("label `{label}` not in label order")))?;
        assign_idx.push(*idx);
    }
    let postprob: Vec<Vec<f64>> = assign_idx
        .iter()
        .map(|&a| {
            let mut row = vec![0.0; k];
            row[a] = 1.0;
            row
        })
        .collect();
    let curves = pointwise_center_curves(ds, &assign_idx, k, center);
    let spec = MethodSpec::bare(
        "partition",
        BTreeMap::from([("nClusters".to_string(), super::args::ArgValue::Int(k as i64))]),
    );
    super::pipeline::assemble_model(
        spec,
        &Arc::new(ds.clone()),
        0,
        0.0,
        FitOutput {
            postprob,
            predictor: Predictor::Interpolated { curves },
            converged: true,
            log_likelihood: None,
            n_params: None,
            ll_trace: Vec::new(),
            labels: ClusterLabels::Named(label_order),
        },
    )
}
