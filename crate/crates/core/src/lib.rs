//! Discrete geometry of neural-architecture search spaces and a
//! flatness-biased architecture gradient.
//!
//! * [`arch_space`]: encodings, validity rules and space sizes.
//! * [`geometry`]: atomic moves, distances, neighbor trees and path trees.
//! * [`landscape`]: accuracy oracles, accuracy paths, barriers and histograms.
//! * [`stats`]: two-sample Kolmogorov–Smirnov test and summaries.
//! * [`a2m`]: the flatness-biased architecture update on differentiable testbeds.

pub mod a2m;
pub mod arch_space;
pub mod error;
pub mod geometry;
pub mod landscape;
pub mod stats;

pub use error::{Error, Result};
