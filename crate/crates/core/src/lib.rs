//! Spin squeezing of a collective atomic spin by continuous QND measurement of
//! `Jz` with Markovian feedback about `Jy`.
//!
//! States live in the symmetric (Dicke) subspace of N spin-1/2 atoms,
//! j = N/2, ordered m = +j (index 0) down to m = -j. Dynamics use the
//! dimensionless time tau = M t, with hbar = 1; only [`design`] uses SI units.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod design;
pub mod dynamics;
mod error;
pub mod feedback;
pub mod linalg;
pub mod observables;
pub mod spin;
pub mod stochastic;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
