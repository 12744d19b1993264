//! Method specification, the six-step estimation pipeline, and the uniform
//! fitted-model interface.

mod args;
mod list;
mod model;
mod pipeline;
mod registry;
mod spec;

pub use args::ArgValue;
pub use list::ModelList;
pub use model::{
    partition_model, partition_model_ordered, quantile_type7, AssignStrategy, CenterFn,
    ClusterModel, Curve, Predictor,
};
pub use pipeline::{estimate, estimate_shared, estimate_traced, Stage};
pub use registry::{
    method_names, register_method, ClusterLabels, FitContext, FitOutput, MethodBackend,
    PreFitData, Prepared, TrajDesign,
};
pub use spec::MethodSpec;

pub(crate) use model::pointwise_center_curves;
