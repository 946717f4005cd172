//! Faedo–Galerkin simulation of the 2D stochastic Euler equation of transport
//! type on the periodic torus `[0, 2π]²`.
//!
//! The velocity is carried as real coefficients over the divergence-free
//! trigonometric basis `𝔠_k`, `𝔰_k` (see [`basis`]). The crate is `no_std`
//! (with `alloc`); IO, configuration files and the command line live in the
//! companion `steuler` crate.
//!
//! Layout:
//! - [`basis`]: modes, truncations, grid transforms, Leray projection, norms.
//! - [`noise`]: the space-independent, finite-mode and truncated Q-Wiener noise.
//! - [`dynamics`]: Stokes, advection (tensor and pseudo-spectral) and transport operators.
//! - [`integrate`]: time steppers, single paths and sequential ensembles.
//! - [`diagnostics`]: energy ledgers and martingale-problem functionals.
//! - [`geometry`]: structure constants, Christoffel symbols, geodesic drift.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod basis;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod integrate;
pub mod noise;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
