//! Debtor typology scoring and contact-strategy selection.
//!
//! Case histories are turned into four dimension scores (willingness,
//! ability, organization, rationality), each dimension is split at 0.5 into
//! one of sixteen typologies, and a per-typology Thompson sampler picks the
//! tonality and send time of the next reminder. A simulator and chi-square
//! tooling support offline experiments.

pub mod case;
pub mod cli;
pub mod error;
pub mod policy;
pub mod report;
pub mod rng;
pub mod scoring;
pub mod simulator;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
