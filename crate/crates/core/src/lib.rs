//! Stochastic score classification: round-robin approximation algorithms,
//! exact evaluators and baselines, and audit tooling.
//!
//! Given `n` independent tests with costs and success probabilities and a
//! partition of the scores `0..=n` into contiguous classes, a strategy
//! conducts tests until the class of the number of successes is known. The
//! crate builds the 2RR and 3RR round-robin orders, evaluates any order or
//! decision tree exactly, computes optimal adaptive and non-adaptive
//! baselines for small `n`, and audits the approximation bounds.

pub mod cli;
pub mod error;
pub mod eval;
pub mod exact;
pub mod experiments;
pub mod model;
pub mod strategies;

pub use error::{Error, Result};
pub use model::{Instance, Realization, SubInstance};
