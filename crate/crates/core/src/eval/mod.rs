//! Metrics and report generation.

pub mod metrics;
pub mod report;
