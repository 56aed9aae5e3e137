//! Agent-based simulation of residential activity and electric load.
//!
//! Pipeline: [`popsynth`] draws households, [`tusdata`] turns time-use diaries
//! into task specs, [`activity`] runs every agent minute by minute,
//! [`appliance`] converts task execution into power, [`metrics`] compares load
//! curves and [`scenario`] applies eco-behaviors to paired runs.

// `!(x >= 0.0)` rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calendar;
pub mod error;
pub mod popsynth;
pub mod rng;
pub mod tusdata;
pub mod activity;
pub mod appliance;
pub mod fixtures;
pub mod simulation;
pub mod metrics;
pub mod scenario;
pub mod config;

pub use error::{Error, Result};
