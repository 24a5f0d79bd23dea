//! Numerical checks of Poincaré, log-Sobolev and transport inequalities for
//! one-dimensional diffusions on truncated grids.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod error;
pub mod generator;
pub mod hopflax;
pub mod measure;
pub mod suite;
pub mod transport;

pub use error::{LabError, Result};
