//! Class encodings for intent classification with out-of-scope (OOS) detection.
//!
//! A classifier is split into a likelihood model that maps an input embedding
//! to a point `z` in `[-1, 1]^p`, followed by a class-encoding rule that maps
//! `z` either to one of `c` intent classes or to the OOS symbol. This crate
//! implements the one-hot rules (thresholded max, thresholded softmax,
//! Euclidean distance to basis vectors) and the dense-vector rule (nearest of
//! `c` arbitrary points within a distance ceiling), and the tooling around
//! them:
//!
//! - [`encoding`]: likelihood vectors, encoding sets, the decision rules.
//! - [`model`]: a one-hidden-layer network trained with Adam under
//!   cross-entropy or mean squared error.
//! - [`metrics`]: FAR, FRR, ISER and the equal-error-rate threshold sweep.
//! - [`topology`]: grid labeling of the likelihood space and connected
//!   component signatures of the decision regions.
//! - [`ces`]: the class encoding search that alternates network fitting with
//!   pairwise repulsion of the class vectors.
//! - [`harness`]: dataset parsers, embeddings, the random-encoding
//!   experiment driver and report rendering.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod ces;
pub mod encoding;
mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod topology;

pub use error::{Error, Result};
