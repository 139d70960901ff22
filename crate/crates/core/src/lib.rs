//! Relational reasoning over feature pairs for kinship verification.
//!
//! The crate is organized bottom-up:
//!
//! - [`diffmath`]: dense tensors, a recording tape for reverse-mode
//!   differentiation, Adam, and a finite-difference gradient checker.
//! - [`gkrnet`]: the star-graph message-passing network (GKR) producing a
//!   kin probability for a feature pair.
//! - [`baselines`]: cosine similarity, MLP fusion, and a learned linear
//!   metric, sharing the training harness.
//! - [`data`]: feature tables, balanced pair sets with fold assignments,
//!   CSV I/O, and a synthetic heritable-trait generator.
//! - [`model`]: the trainable bundle of an optional shared encoder plus one
//!   scoring head.
//! - [`trainer`]: mini-batch Adam training, evaluation, five-fold
//!   cross-validation, and ablation grids.
//! - [`checkpoint`]: versioned JSON containers for trained models.

pub mod baselines;
pub mod checkpoint;
pub mod data;
pub mod diffmath;
pub mod error;
pub mod gkrnet;
pub mod model;
pub mod seeding;
pub mod trainer;

pub use error::{GkrError, Result};
