//! Numerical laboratory for divergence-form elliptic equations on truncated
//! planar exterior domains: solve, extract level sets, verify coarea and
//! level-set identities, and measure pointwise decay rates.

pub mod coefficients;
pub mod config;
pub mod decay;
pub mod error;
pub mod grid;
pub mod levelset;
pub mod report;
pub mod runner;
pub mod solver;
pub mod verify;

pub use error::{EdlError, Result};
