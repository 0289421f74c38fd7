//! Sticky couplings for diffusions with different drifts: explicit
//! total-variation bounds and a Monte Carlo engine for the coupled pair.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod casestudies;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod model;
pub mod quad;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
