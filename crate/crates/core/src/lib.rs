//! Few-shot linear classifiers whose weights are composed from a meta-learned
//! basis, together with the retrieval, one-class and open-set evaluation
//! harnesses built around them.

pub mod baselines;
pub mod episode;
pub mod error;
pub mod eval;
pub mod feature_store;
pub mod hyperclass;
pub mod linear;
pub mod meta;
pub mod ranking;
pub mod session;
pub mod theory;

pub use error::{Error, Result};
