//! Classical comparators: k-means with an elbow-selected `k`, and DBSCAN whose
//! noise points are attached with the same post-processing as the sampler.

mod dbscan;
pub(crate) mod kmeans;

pub use dbscan::{dbscan, dbscan_with_postprocess, DbscanParams, DbscanResult};
pub use kmeans::{elbow_curve, elbow_select_k, kmeans, kmeans_with_restarts, KMeansParams, KMeansResult};
