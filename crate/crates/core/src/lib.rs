//! Multi-hop device-to-device emergency relaying over a fully loaded
//! cellular network: urban map geometry, link model, closed-form outage
//! analysis, relay routing strategies and a seeded Monte-Carlo harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod cli;
pub mod config;
pub mod env;
pub mod routing;
pub mod error;
pub mod seeds;
pub mod sim;

pub use error::{Error, Result};
