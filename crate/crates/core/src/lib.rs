//! Pseudospectral laboratory for the fractional BBM equation
//!
//! ```text
//! u_t + u_x + u u_x + |D|^alpha u_t = 0,    0 < alpha < 1,
//! ```
//!
//! on a periodic domain. The crate provides the spectral discretization, the
//! normal-form symbol `m` and the bilinear transform built from it, the
//! modified energies with their quartic-form decomposition, an RK4 evolution
//! of the equation, and sweep harnesses that measure the scaling exponents
//! (cubic standard-energy rate, quartic modified-energy rate, and the
//! `1/eps^2` lifespan consistency check).
//!
//! All heavy kernels are data-parallel over output rows and reduce in a fixed
//! order, so results are bit-identical with and without the `parallel`
//! feature.

pub mod energy;
pub mod error;
pub mod exec;
pub mod grid;
pub mod normal_form;
pub mod quartic;
pub mod solver;
pub mod sweep;
pub mod symbol;
pub mod testutil;

pub use error::{Error, Result};
pub use grid::{FracParams, GridSpec, SpectralField};
