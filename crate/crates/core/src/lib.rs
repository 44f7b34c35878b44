//! Distributed proximal point (DPPA) and distributed gradient descent (DGD)
//! over synthetic communication graphs.

// Negated comparisons are how NaN inputs are rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod costs;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod mixing;
pub mod netgraph;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
