//! Block-based spectral processing of triangle meshes.

pub mod cli;
pub mod compress;
pub mod denoise;
pub mod error;
pub mod mesh;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
