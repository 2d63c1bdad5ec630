//! Connectome-guided automatic learning rates.
//!
//! The pipeline per epoch: capture probe activations, build a correlation
//! connectome, summarize its topology, measure the change from the previous
//! epoch, smooth and normalize that change, and let the controller scale a
//! Robbins-Monro envelope. Baseline schedules, a small MLP trainer and an
//! experiment harness sit alongside.

pub mod connectome;
pub mod controller;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod schedules;
pub mod signal;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
