//! Simulation and time-complexity analysis of synchronous, m-synchronous,
//! asynchronous and batch-aggregating (Rennala) SGD when workers compute
//! stochastic gradients at heterogeneous and possibly time-varying speeds.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core can be reused
//! outside of a hosted environment. File formats, sweeps and the command line
//! live in the companion `hetsgd` crate.
//!
//! - [`problem`]: the tridiagonal quadratic test objective and its Bernoulli
//!   progress oracle.
//! - [`time_models`]: fixed times, random delays and computation-power
//!   profiles, plus scenario generators.
//! - [`simulator`]: the event-driven engine running the four methods.
//! - [`analyzer`]: closed-form complexities and the lower/upper bound
//!   recursions under the universal computation model.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analyzer;
mod error;
pub mod problem;
pub mod rng;
pub mod simulator;
pub mod time_models;
pub mod tridiag;

pub(crate) use error::invalid;
pub use error::{Error, Result};
