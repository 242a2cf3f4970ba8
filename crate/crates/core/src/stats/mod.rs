//! Statistical estimation primitives used by the detectors: Gaussian fits,
//! kernel CDFs and KS distance, Gaussian mixtures via EM, a standardization
//! embedding, and k-means with silhouette-based model-order selection.

mod cluster;
mod embedding;
mod gaussian;
mod gmm;
mod kde;

pub use cluster::{kmeans, select_m, select_m_with_assignment, silhouette, ClusterAssignment};
pub use embedding::EmbeddingModel;
pub use gaussian::{fit_gaussian, GaussianParams};
pub use gmm::{fit_gmm, GaussianMixture};
pub use kde::{ks_distance, ks_distance_with_cache, silverman_bandwidth, BaselineCache, KernelCdf};

pub(crate) use gaussian::LN_2PI;

use thiserror::Error;

/// Errors from statistical estimation and clustering.
#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("sample contains a non-finite value")]
    NonFiniteSample,
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("need {m} distinct points for {m} clusters, got {distinct}")]
    TooFewDistinctPoints { distinct: usize, m: usize },
    #[error("silhouette requires at least 2 clusters")]
    SingleCluster,
    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },
    #[error("invalid {what}")]
    InvalidParameter { what: &'static str },
}
