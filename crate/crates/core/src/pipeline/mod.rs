//! Radar ingestion, climb filtering, train/test splitting and the synthetic
//! fleet simulator.

pub mod filter;
pub mod radar;
pub mod simulate;
pub mod split;
