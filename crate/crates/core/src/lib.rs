//! Simulation and schedule optimization for measurement-driven ("Zeno dragging") k-SAT solving.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analytic_qubit;
pub mod bounds;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod operators;
pub mod rng;
pub mod sat;

pub use error::{Error, Result};
