//! Tools for analyzing and visualizing high-dimensional movement-control
//! optimization landscapes through random 2D slices.
//!
//! The crate bundles:
//!
//! - analytic test objectives with known conditioning ([`objectives`]),
//! - an inverted-pendulum trajectory/policy optimization testbed ([`pendulum`]),
//! - numeric Hessians, eigendecomposition and condition numbers ([`analysis`]),
//! - random slice planes and grid evaluation ([`slices`]),
//! - CMA-ES and a gradient-descent path tracer ([`optimize`]),
//! - contour/heightmap rendering ([`render`]),
//! - a figure-reproduction CLI driver ([`cli`], see the `optslice` binary).

// `!(x > 0.0)` guards reject NaN along with nonpositive values; index-based
// loops mirror the matrix update formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod config;
mod error;
pub mod linalg;
pub mod objectives;
pub mod optimize;
pub mod pendulum;
pub mod render;
pub mod slices;
pub mod util;

pub use error::{Error, Result};
pub use objectives::ObjectiveHandle;
