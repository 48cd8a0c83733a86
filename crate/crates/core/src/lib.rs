//! Homogenized free-boundary velocity for the periodic Hele-Shaw problem.
//!
//! The crate has three numerical layers: the 1D front ODE ([`ode1d`]), a
//! geometric multigrid Poisson solver ([`multigrid`]) and the enthalpy
//! (BBR) scheme built on top of it ([`stefan`]). [`sweep`] drives parameter
//! sweeps and writes their outputs.

// `!(x > 0.0)` is the NaN-rejecting form used throughout for validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coeffs;
pub mod contour;
pub mod error;
pub mod lattice;
pub mod multigrid;
pub mod ode1d;
pub mod stefan;
pub mod sweep;

pub use error::{Error, Result};
