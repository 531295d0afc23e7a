//! Phase estimation with a vacuum/squeezed superposition probe read out by
//! homodyne detection.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod gaussian;
pub mod homodyne;
pub mod mle;
pub mod probe;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use gaussian::{ComplexGaussianAmplitude, SqueezedParams};
pub use homodyne::{DensityMode, GridConfig, Statistics, TabulatedDensity};
pub use probe::ProbeSpec;
