//! Pairwise severity ranking over precomputed feature embeddings.
//!
//! The library trains siamese comparison heads (a conventional
//! single-score baseline and an n-hidden-comparison variant) on binary
//! severity labels, reconstructs per-subject rank lists from the pairwise
//! comparison matrix with a Bradley-Terry fit, and attributes each
//! ranking decision to its comparison channels with exact Shapley values,
//! aggregating externally supplied per-channel heatmaps into one
//! explanation.
//!
//! Start with the runnable examples: `synth_dataset`, `sample_pairs`,
//! `train_model`, `rank_items`, `evaluate_model`, `explain_pair`, and
//! `full_pipeline`. The same capabilities are exposed by the `sevrank`
//! binary as subcommands.

pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod ranking;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
