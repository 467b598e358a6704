//! Simulation of scalar stochastic delay equations near a Hopf point and
//! their delay-free reductions.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod dde;
pub mod ensemble;
pub mod error;
pub mod functional;
pub mod initial;
pub mod reduced;
pub mod sdde;
pub mod segment;
pub mod spectral;
pub mod stats;
pub mod wiener;

pub use error::{Error, Result};
pub use functional::{Atom, LinearFunctional, Nonlinearity};
pub use initial::InitialSegment;
