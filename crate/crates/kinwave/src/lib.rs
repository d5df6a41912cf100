//! Traveling waves of the two-species Vlasov-Poisson system.
//!
//! The crate reduces each wave class (solitary wave, shock, wave train) to a
//! Sagdeev potential, decides existence from its sign and zero structure,
//! builds the potential profile, reconstructs the phase-space distributions
//! and generates explicit families of non-unique solutions.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod interp;
pub mod model;
pub mod quad;

pub mod cli;
pub mod conditions;
pub mod config;
pub mod densities;
pub mod examples;
pub mod families;
pub mod output;
pub mod profile;
pub mod reconstruction;
pub mod sagdeev;

pub use error::{Error, Result};
pub use model::{Marginal, PlasmaParams};
