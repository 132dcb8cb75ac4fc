//! Numerical laboratory for finite extinction time of degenerate absorption
//! problems `u_t + (-Δ)^m u + a(x)|u|^{q-1}u = 0`.

// `!(x > 0.0)` is used throughout to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod banded;
pub mod criteria;
pub mod error;
pub mod extinction;
pub mod groundstate;
pub mod orlicz;
pub mod potential;
pub mod report;
pub mod simulator;
pub mod sphi;
pub mod table;

pub use error::{Error, Result};
