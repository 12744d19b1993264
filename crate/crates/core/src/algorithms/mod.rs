//! Concrete clustering backends and the numerical routines behind them.
//!
//! Every backend registers into the method registry under its short name:
//! `kml`, `lmkm`, `gbtm`, `gmm`, `kmedoids`, `stratify`, `random`, `feature`.

mod distance;
mod em;
pub(crate) mod feature;
pub(crate) mod gbtm;
pub(crate) mod gmm;
mod kmeans;
pub(crate) mod kmedoids;
pub(crate) mod kml;
pub(crate) mod lmkm;
pub(crate) mod random;
pub(crate) mod stratify;

pub use distance::{dtw_distance, dtw_distance_windowed, euclidean_distance, DistanceMatrix};
pub use feature::{register_clusterer, register_representation, ClusterStepFn, RepresentationFn};
pub use gbtm::GbtmParams;
pub use gmm::{marginal_log_density, GmmParams};
pub use kmeans::{kmeans, lloyd_from_centers, KmeansFit};
pub use kmedoids::{pam, PamFit};
pub use stratify::{Aggregate, CmpOp, Rule};
