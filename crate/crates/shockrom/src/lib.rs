//! Reduced-order models of 1-D scalar conservation laws with shocks.
//!
//! Snapshots are mapped to the hodograph plane `x(t, u)`, where characteristic
//! motion is affine in time, and a linear model is fitted there by dynamic mode
//! decomposition. Shocks are cut back in when the solution is rebuilt on a grid.

// `!(a < b)` is used on purpose so that NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dmd;
pub mod error;
pub mod experiments;
pub mod flux;
pub mod grid;
pub mod hfm;
pub mod hodograph;
pub mod rom;

pub use error::{Category, Error, Result};
