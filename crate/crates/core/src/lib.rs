//! Linear correction of mismatched L-values.
//!
//! The correction factor for a mismatched L-value is twice the saddlepoint of
//! its conditional cumulant generating function. This crate computes that
//! factor, compares it with GMI, least-squares and Gaussian-moment rules, and
//! evaluates all of them through pairwise error probabilities and coded BER
//! simulation over an interference channel.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgf;
pub mod correction;
pub mod error;
pub mod experiments;
pub mod fec;
pub mod llr;
pub mod pep;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
