//! Binary space partitioning forests.
//!
//! Angled-cut partition trees in `d` dimensions, where every cut is free in
//! one pair of dimensions and parallel to the rest, and a Bayesian
//! sum-of-trees regressor sampled with Gibbs updates and conditional SMC.

pub mod bench;
pub mod error;
pub mod features;
pub mod forest;
pub mod geometry2d;
pub mod inference;
pub mod model_io;
pub mod process;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use features::Features;
pub use forest::{BspForest, InputSchema, Prediction};
