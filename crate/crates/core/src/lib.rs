//! Cross-domain hybrid recommender core.
//!
//! Ranks a user's candidate items in a target domain by fusing three learned
//! signals: attention over the candidate's unstructured text, attentive
//! transfer from the user's source-domain history, and a neural
//! collaborative-filtering interaction. Includes the full training loop
//! (per-epoch negative resampling, Adam, early stopping), leave-one-out
//! top-K ranking evaluation, a planted-signal synthetic dataset generator,
//! and a finite-difference harness that validates every analytic gradient.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numerics;
pub mod synthgen;
pub mod training;

pub use error::{Error, Result};
