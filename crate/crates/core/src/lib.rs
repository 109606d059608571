#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::redundant_closure_call)]

//! Orbital density evolution under solar radiation pressure and oblateness in
//! the planar eccentricity phase space.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod gmmut;
pub mod histogram;
pub mod io;
pub mod odeint;
pub mod propagators;
pub mod scenario;
pub mod stochastics;
pub mod validation;

pub use error::{Error, Result};
