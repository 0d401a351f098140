//! Edge-state transfer in a modulated SSH chain with partial
//! next-nearest-neighbor hopping, realized in a frequency-modulated
//! optomechanical array.

pub mod bessel;
#[cfg(feature = "cli")]
pub mod cli;
#[cfg(feature = "cli")]
pub mod config;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod output;
pub mod rwa;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
