//! Anthropometric, behavior-aware furniture layout generation and evaluation.
//!
//! The pipeline: assets and a room go through a relation backend
//! ([`relations`]), the resulting relations are compiled against a body
//! profile into a penalty program ([`constraints`]), the program is minimized
//! group by group ([`optimizer`]), and finished layouts are scored with the
//! spatial and human-centric measures in [`metrics`].

pub mod anthropometry;
pub mod cli;
pub mod config;
pub mod constraints;
pub mod error;
pub mod geometry;
pub mod manifest;
pub mod metrics;
pub mod optimizer;
pub mod par;
pub mod relations;

pub use error::{Error, Result};
