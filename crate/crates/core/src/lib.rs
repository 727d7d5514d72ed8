//! Resilience analytics for interdependent power/water/transport networks.
//!
//! The crate simulates disruption and recovery of an interdependent
//! infrastructure network, quantifies resilience as weighted equivalent
//! outage hours, and builds low-dimensional prediction models by clustering
//! network components on topological and functional features.
//!
//! Main building blocks:
//!
//! - [`network`]: the interdependent network data model plus a deterministic
//!   synthetic grid-town generator.
//! - [`features`]: per-component centrality and flow features, assembled into
//!   standardized feature matrices.
//! - [`hazard`]: synthetic flood scenarios with distance-decaying failure
//!   probabilities.
//! - [`sim`]: the flow-and-recovery simulator producing PCS time series and
//!   outage-hour metrics.
//! - [`cluster`]: K-means component clustering, cluster-level failure
//!   counts, elbow selection, and the kneedle knee detector.
//! - [`regress`]: random-forest regression with split/CV/metric utilities.
//! - [`search`]: elbow baseline and the iterative cluster-count search.
//! - [`pipeline`]: end-to-end orchestration, file formats, and reports.

pub mod cluster;
pub mod error;
pub mod features;
pub mod geometry;
pub mod hazard;
pub mod network;
pub mod pipeline;
pub mod regress;
pub mod rng;
pub mod search;
pub mod sim;

pub use error::{Error, Result};
