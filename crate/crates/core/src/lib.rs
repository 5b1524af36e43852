pub mod atmosphere;
pub mod chi2;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod fpca;
pub mod generative;
pub mod kneedle;
pub mod learning;
pub mod model_io;
pub mod performance;
pub mod pipeline;
pub mod profile;
pub mod workflow;

pub use error::{Error, Result};
