//! Local gradient and Hessian bounds for diffusion semigroups.
//!
//! For the SDE `dX = b(X) dt + sqrt(2) sigma(X) dW` with generator
//! `tr(a D^2) + b . D` (`a = sigma sigma^T`) this crate evaluates explicit
//! pointwise bounds on `|D T_t phi(x)|` and `|D^2 T_t phi(x)|` built from local
//! coefficient norms on the unit ball around `x`, and estimates the same
//! derivatives independently: Monte Carlo with common random numbers, the
//! Bismut weight, exact Gaussian/OU semigroups and a finite-difference
//! Kolmogorov solver. Unknown absolute constants in the bounds are set to one,
//! so bound and measurement are compared through their ratio.
//!
//! The crate is `no_std` (it needs `alloc`). Enable `parallel` to fan path
//! simulation out over rayon; every estimate is bit-identical for any worker
//! count because paths are grouped into fixed chunks with counter-based noise.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(
    clippy::too_many_arguments,
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord
)]

extern crate alloc;
#[cfg(feature = "parallel")]
extern crate std;

pub mod bounds;
pub mod catalog;
pub mod coeffs;
pub mod ergodic;
mod error;
pub mod exec;
pub mod linalg;
pub mod observable;
pub mod pdeoracle;
pub mod poisson;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod semigroup;
pub mod singular;
pub mod stats;

pub use error::{Error, Result};
pub use observable::Observable;

/// Literal carried by every report that contains a bound evaluated with the
/// absolute constants set to one.
pub const CONSTANT_CONVENTION: &str = "C=1, compare by ratio";
