//! Numerical kernels for 0th-order pseudodifferential operators on the torus.
//!
//! The crate discretizes operators of the form
//!
//! ```text
//! P = <D>^{-1} D_{x2} + sin(x1)(1 - V_m(D_{x1})) + (1 - V_m(D_{x1})) sin(x1) + V_a(D_{x1})
//! ```
//!
//! one Fourier mode `e^{i n x2}` at a time. Resonances are obtained as eigenvalues
//! of the operator conjugated to the complex contour `x + i θ G0(x)`; the viscous
//! regularization `P + iνΔ` is discretized on the real circle. Both reduce to dense
//! complex matrices whose spectra are computed by the Hessenberg/Schur solver in
//! [`eigen`].
//!
//! Everything here is `no_std` + `alloc`. File formats, configuration and the
//! command line live in the companion `torres` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assign;
pub mod deformation;
pub mod eigen;
pub mod error;
pub mod expr;
pub mod fbi;
pub mod grid;
pub mod linalg;
pub mod mode;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
