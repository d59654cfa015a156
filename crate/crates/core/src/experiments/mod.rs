//! Sweeps, demonstrations and reports built on the numerical core.

pub mod demos;
pub mod report;
pub mod svg;
pub mod sweep;
