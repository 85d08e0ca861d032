//! Evaluation protocols and metrics.

pub mod fsocc;
pub mod fsor;
pub mod irrf;
pub mod metrics;
