//! Clustering engine for longitudinal data.
//!
//! Trajectories (repeated measurements of one subject over time) are grouped
//! into clusters by a set of interchangeable backends (cross-sectional k-means,
//! feature-based coefficient clustering, mixture-of-regressions EM, growth
//! mixture EM, distance-based k-medoids, stratification rules, and random
//! baselines). Every backend is driven through the same six-step estimation
//! pipeline and produces a [`ClusterModel`] with a uniform interface: a
//! row-stochastic posterior probability matrix, cluster proportions, and a
//! per-cluster trajectory predictor.
//!
//! On top of the fitted-model interface sit a metric registry (internal
//! validity indices, likelihood criteria, and partition-comparison metrics)
//! and batch/repetition/bootstrap harnesses with fully deterministic seed
//! threading.

pub mod algorithms;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod method;
pub mod metrics;
pub mod rng;

pub use dataset::{Dataset, GroundTruth, ImputePolicy, TrajectoryMatrix};
pub use error::{Error, Result};
pub use method::{
    estimate, estimate_traced, partition_model, ArgValue, AssignStrategy, CenterFn, ClusterModel,
    MethodSpec, ModelList, Predictor, Stage,
};
