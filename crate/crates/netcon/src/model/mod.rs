//! Core execution model: protocol descriptions, configurations, and the
//! single-interaction transition semantics.

pub mod config;
pub mod format;
pub mod spec;
pub mod step;
