//! Exact construction and verification of nonautonomous interval dynamical
//! systems built by blowing up the adding-machine orbit of the Cantor set.
//!
//! All map data is exact rational arithmetic. Floats appear only in logged
//! entropy estimates.

pub mod analysis;
pub mod blowup;
pub mod constructions;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod plmap;
pub mod rational;
pub mod symbolic;

pub use error::{NdsError, Result};
pub use rational::Q;
