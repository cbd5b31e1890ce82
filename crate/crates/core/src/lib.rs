//! Analytics and experiment planning for generative-augmentation robustness
//! studies.
//!
//! The crate is organised around the files exchanged with the model adapter
//! (see [`data`]) and the pure functions that consume them:
//!
//! - [`prompts`] expands class labels into prompt templates and emits
//!   generation manifests.
//! - [`mixture`] plans seeded, class-stratified real/generated training mixes.
//! - [`filter`] drops samples whose image-text similarity falls below a
//!   threshold.
//! - [`metrics`] holds accuracy, accuracy gap, effective robustness, FID and
//!   intra-class diversity.
//! - [`eval`] restricts evaluation to overlapping classes and assembles
//!   cross-dataset comparison tables.
//! - [`report`] renders those tables and scatter data.

pub mod data;
pub mod error;
pub mod eval;
pub mod filter;
pub mod jsonl;
pub mod metrics;
pub mod mixture;
pub mod prompts;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
