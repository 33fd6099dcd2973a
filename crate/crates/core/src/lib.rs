//! Simulation and verification toolkit for Markov-modulated binomial
//! counting processes.
//!
//! A population of `n` obligors defaults independently with a per-obligor
//! intensity `λᵀZ_t` driven by a finite-state background Markov chain `Z`.
//! The crate provides:
//!
//! - [`numerics`]: small dense linear algebra, matrix exponentials, special
//!   functions and the reproducible random-number streams.
//! - [`chain`]: generator validation, stationary/fundamental/deviation
//!   matrices, exact path sampling of the background chain.
//! - [`counting`]: exact event-driven simulation of the counting process
//!   (with optional recovery) plus two independent oracles.
//! - [`limits`]: centering curves, scaling exponents and the limiting
//!   Gaussian laws, with exact-transition samplers.
//! - [`stats`]: replicated Monte-Carlo experiments and conformance gates.
//! - [`cli`]: configuration, presets and CSV/SVG emission for the `mmbin`
//!   binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod counting;
pub mod error;
pub mod limits;
pub mod numerics;
pub mod stats;

pub use error::{Error, Result};
