//! Classical action statistics and fidelity decay for the perturbed
//! standard map.
//!
//! The crate follows one pipeline: sample an ensemble ([`ensemble`]), iterate
//! the map and accumulate action differences ([`map`]), reduce them to
//! variances, correlators and fits ([`stats`]), and turn those into fidelity
//! curves ([`fidelity`]) that can be checked against the exact quantum
//! evolution ([`quantum`]). [`config`], [`presets`] and [`run`] wrap the
//! pipeline into reproducible experiments with on-disk output.

pub mod compare;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod fidelity;
pub mod map;
pub mod presets;
pub mod quantum;
pub mod reduce;
pub mod run;
pub mod stats;

pub use error::{Error, Result};
