//! Finite-range calculus of ultradifferentiable weights and a constructive
//! Whitney extension for jets on finite sets.
//!
//! Module map:
//! - [`seqcore`]: weight sequences in the log domain, `h`, the index functions,
//!   `omega_M`, the counting function and the descendant construction.
//! - [`fncore`]: weight functions, Young conjugate, `omega*`, kappa, Poisson
//!   extension and the associated weight matrix.
//! - [`conditions`]: witness-producing checks for the structural conditions.
//! - [`jets`]: jets on finite sets, Taylor maps, remainders and certificates.
//! - [`geometry`]: dyadic Whitney cubes and nearest-point diagnostics.
//! - [`pou`]: convolution bumps with certified bounds and the partition of unity.
//! - [`extend`]: degree schedule, extension field and its verification.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod extend;
pub mod fncore;
pub mod geometry;
pub mod jets;
pub mod numeric;
pub mod pou;
pub mod quad;
pub mod seqcore;

pub use error::{Error, Result};
