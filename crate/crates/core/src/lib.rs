//! Interacting n-particle Markov dynamics and numerical diagnostics for
//! propagation of chaos.
//!
//! The crate is organised around a few value types: [`Configuration`]
//! (an ordered n-tuple of points), [`AtomicMeasure`] (a finitely supported
//! probability law) and [`OccupancyLaw`](entropy::OccupancyLaw) (a symmetric
//! law on a finite alphabet). Kernels in [`processes`] move configurations
//! forward in time, [`meanfield`] solves the limiting equations, and
//! [`diagnostics`] compares the two.

// `!(x > 0.0)` is used on purpose to reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod dictionary;
pub mod empirical;
pub mod entropy;
pub mod error;
pub mod meanfield;
pub mod metrics;
pub mod point;
pub mod processes;
pub mod stream;

pub use empirical::{AtomicMeasure, Configuration};
pub use error::{Error, Result};
pub use point::{Point, PointKind};
pub use stream::RandomStream;
