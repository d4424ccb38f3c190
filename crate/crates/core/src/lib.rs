//! Quantum estimation toolkit for parametric families of full-rank states.
//!
//! Computes symmetric and right logarithmic derivatives, the SLD/RLD Fisher
//! matrices and their dual `Z` matrices, classifies a model as classical,
//! quasi-classical, D-invariant or asymptotically classical, and evaluates
//! the SLD, RLD and Holevo Cramér-Rao type bounds.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod infogeo;
pub mod random;
pub mod classify;
pub mod bounds;
pub mod cli;

pub use error::{Error, Result};
