//! Desk-scale sim-to-real driving toolkit.

pub mod curation;
pub mod eval;
pub mod geometry;
pub mod i2e;
pub mod pipeline;
pub mod planners;
pub mod prompt;
pub mod simworld;
