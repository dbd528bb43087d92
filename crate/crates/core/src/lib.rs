//! Stochastic-geometry engine for dense indoor MIMO SWIPT networks.
//!
//! The library computes the joint rate-energy performance of a network of
//! Poisson-placed power heads serving a power-splitting receiver at the
//! origin, with axis-parallel walls drawn from a Manhattan Poisson line
//! process. Both an analytical route (characteristic-function inversion of
//! the interference, Wishart largest-eigenvalue gain density) and a Monte
//! Carlo route are provided, and rate-energy trade-off curves are extracted
//! by inverting the joint CCDF at a fixed reliability level.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod quad;
pub mod specfun;
pub mod tradeoff;

pub use error::{Error, Result};
pub use geometry::SystemParams;

pub(crate) const SPEED_OF_LIGHT: f64 = 299_792_458.0;
