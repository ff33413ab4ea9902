//! Resistance optimization for Friedkin-Johnsen opinion dynamics.
//!
//! The crate is `no_std` with `alloc`; disable the default `std` feature to
//! build without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calculus;
pub mod clique;
pub mod equilibrium;
pub mod graph;
pub mod matrix;
pub mod model;
pub mod optimize;
pub mod reduction;
pub mod scalar;

pub use matrix::{LinalgError, Matrix};
pub use model::{
    BudgetNorm, BudgetSpec, Bounds, InteractionMatrix, ModelError, OpinionInstance,
    ResistanceVector, ValidationReport,
};
pub use scalar::{Rational, Scalar};
