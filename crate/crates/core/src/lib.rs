//! Dense-subgraph clustering driven by an exact Gaussian boson sampling
//! simulator.
//!
//! Points are turned into a threshold graph ([`graph`]), the graph is encoded
//! into a simulated boson sampler whose subset probabilities are squared
//! Hafnians or Torontonians ([`matchers`], [`gbs`]), and clusters are peeled
//! off as dense sampled subgraphs ([`qclust`]). [`baselines`], [`metrics`] and
//! [`bench`] provide the classical comparators, the quality scores and the
//! benchmark harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod error;
pub mod gbs;
pub mod graph;
pub mod matchers;
pub mod metrics;
pub mod qclust;
pub mod seeds;

pub use error::{Error, Result};
pub use graph::{DistanceMatrix, Graph, Point, PointSet};
pub use qclust::{ClusterParams, Clustering, Method};
