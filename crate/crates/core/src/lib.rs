//! Mode-based adversary-tolerant distributed randomized Kaczmarz.
//!
//! A central worker solves a consistent linear system `Ax = b` by querying
//! redundant workers for row residuals. Some workers are adversarial and add
//! a per-category offset to their returns. The central worker groups the
//! returned residuals per row, keeps the largest qualifying group (the
//! *mode*), uses it for a Kaczmarz step, and optionally maintains a
//! frequency-based block-list of suspected adversaries.
//!
//! The crate has three layers:
//! - simulation: [`model`], [`aggregate`], [`solver`], [`blocklist`];
//! - exact analysis of the mode distribution and convergence constants in
//!   arbitrary-precision rational arithmetic: [`analysis`];
//! - experiment orchestration, reference-table comparison, and file output:
//!   [`harness`].

pub mod aggregate;
pub mod analysis;
pub mod blocklist;
pub mod error;
pub mod harness;
pub mod model;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
