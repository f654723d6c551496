//! Deep classifier kriging (DCK): distribution-free probabilistic spatial
//! prediction for univariate and bivariate processes.
//!
//! The pipeline turns continuous spatial observations into indicator classes,
//! trains a feed-forward classifier on compactly supported radial-basis
//! embeddings of the coordinates, and recovers smooth predictive CDFs by
//! kernel-smoothing the predicted class probabilities around per-class node
//! points. Non-collocated bivariate data are first harmonized by a
//! quantile-line fusion step (collocation, projection, soft-NN augmentation).
//!
//! Modules mirror the pipeline stages:
//!
//! * [`simgen`] — synthetic Gaussian / Tukey g-and-h random fields and the
//!   benchmark scenarios,
//! * [`fusion`] — collocation, quantile-line fitting, projection, augmentation,
//! * [`discretize`] — indicator class construction (univariate thresholds,
//!   per-line intervals with node points),
//! * [`embed`] — multi-resolution Wendland radial-basis features,
//! * [`classifier`] — the softmax MLP, cross-entropy loss, Adam training,
//! * [`cdf`] — kernel-smoothed predictive distributions (quantiles, intervals,
//!   exceedance probabilities, joint sampling),
//! * [`metrics`] — MAE / PICP / AL, energy and variogram scores, PIT,
//! * [`baseline`] — exact Gaussian-process (co-)kriging for comparison,
//! * [`harness`] — end-to-end pipeline and experiment replication.

pub mod baseline;
pub mod bundle;
pub mod cdf;
pub mod classifier;
pub mod csvio;
pub mod discretize;
pub mod embed;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod simgen;
pub mod special;
pub mod types;

pub use bundle::{BundleMeta, ModelBundle};
pub use error::DckError;
pub use rng::SeedPolicy;
pub use types::{BiSampleSets, Location, UniDataset};

/// Crate result type.
pub type Result<T> = std::result::Result<T, DckError>;
