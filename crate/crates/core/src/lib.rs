//! Design toolkit for dual-mode photonic-crystal waveguide single-photon
//! sources: band structures from a 2D plane-wave supercell solver, group
//! indices, Purcell and β-factor maps, and the pump-impurity budget.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod cli;
pub mod emitter;
pub mod error;
pub mod geometry;
pub mod pwe;
pub mod source;

pub use error::{Error, Result};
