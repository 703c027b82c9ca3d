//! Learning on measured trajectory datasets: unsupervised clustering, a
//! supervised direction classifier and a conditional diffusion generator.

mod error;

pub mod classifier;
pub mod cluster;
pub mod generator;

pub use error::{Error, Result};
