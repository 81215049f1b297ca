//! Gradient compensation for composite objectives `f = f̂ + r`.
//!
//! The solver descends along the closed-form model gradient `∇f̂` corrected by
//! a constant `δ = ∇f(x̃) − ∇f̂(x̃)` measured at occasional exact-gradient
//! points. Model-based steps cost only line-search evaluations; a running bound
//! `ē` on the correction error decides when a fresh exact gradient is needed.
//!
//! Two benchmark families ship with the crate: random convex quadratics
//! ([`quadbench`]) and LQR with a small nonlinear state perturbation
//! ([`lqrenv`]). The [`cli`] module runs them and writes traces.

// Parameter checks are written `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod composite;
mod error;
pub mod linesearch;
pub mod lqrenv;
pub mod matlin;
pub mod quadbench;
pub mod solver;

pub use error::{Error, Result};
