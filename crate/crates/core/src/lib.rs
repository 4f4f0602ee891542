//! Invariant coordinate selection refined by local projection pursuit.
//!
//! The crate finds low-dimensional projections of multivariate data that look
//! far from Gaussian. It prewhitens the data with the sample covariance,
//! rotates it into the eigenbasis of a second (pairwise, one-step M-type)
//! scatter estimator, and then refines candidate coordinate projections by
//! gradient descent on the orthogonal group, minimizing a kernel estimate of
//! differential entropy.
//!
//! Everything here is pure computation: no IO, no threads, no global state.
//! The crate is `no_std` and only needs `alloc`; math functions come from
//! [`libm`], or from the platform with the `std` feature, which is faster in
//! the kernel loops. File formats, plotting and the command-line driver live in the
//! companion `ppics` crate.
//!
//! Module map:
//!
//! - [`linalg`]: dense matrices, symmetric eigendecomposition, thin SVD, the
//!   closed-form exponential of the structured antisymmetric update.
//! - [`scatter`]: centering, sample covariance, one-step symmetrized
//!   M-estimator of scatter.
//! - [`entropy`]: kernel density, entropy estimate, Gaussian reference value,
//!   gradient matrix, and the generic [`entropy::PpIndex`] trait.
//! - [`optimizer`]: the local projection-pursuit loop with step halving.
//! - [`pipeline`]: prewhitening, ICS rotation, start enumeration, and
//!   recovery of the overall linear transform.
//! - [`synthetic`]: seeded generators with planted structure, and a
//!   principal-angle recovery score.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod entropy;
mod error;
pub mod linalg;
mod math;
pub mod optimizer;
pub mod pipeline;
pub mod scatter;
pub mod synthetic;

pub use error::{Error, Result};
pub use linalg::Matrix;
