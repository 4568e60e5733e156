//! Multi-modal MPPI control driven by an active-inference symbolic planner.
//!
//! The crate is organised bottom-up: [`model`] holds shared types and the
//! randomness contract, [`halton`] the smooth exploration noise, [`cost`] the
//! cost terms, [`world`] the forward models, [`controller`] the sampling-based
//! optimizer, [`aip`] the symbolic planner and [`orchestrator`] the loop that
//! ties them together.

pub mod aip;
pub mod controller;
pub mod cost;
pub mod error;
pub mod halton;
pub mod model;
pub mod orchestrator;
pub mod world;

pub use error::{Error, Result};
