//! Bergman kernels of positive line bundles on model Kähler manifolds, their
//! Fubini–Study currents, and equidistribution of zeros of random sections.

pub mod asymptotics;
pub mod bergman;
pub mod bundles;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod model_kernel;
pub mod random_sections;

pub use error::{Error, Result};
