//! Finite-volume laboratory for the grand-canonical perfect Bose gas in
//! anisotropic periodic boxes with sides `V^{α1} × V^{α2} × V^{α3}`.
//!
//! Lengths are measured in units of the thermal de Broglie length λ and
//! densities in `λ^{-3}`; the single-particle spectrum enters only through
//! `βε(n) = πλ² Σ_ν (n_ν / L_ν)²`.
//!
//! * [`numerics`]: Bose functions, θ₃, lattice sums, erf.
//! * [`box_model`]: geometry, mode densities, total density and the
//!   chemical-potential solver.
//! * [`condensate`]: critical density, the constants A/B/C, scaled condensate
//!   densities and the type I/II/III classifier.
//! * [`cycles`]: cycle-length densities and the long-cycle hierarchy.
//! * [`correlation`]: two-point functions and coherence lengths.
//! * [`scaling`]: volume sweeps and power-law extrapolation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod box_model;
pub mod condensate;
pub mod correlation;
pub mod cycles;
mod error;
pub mod numerics;
pub mod scaling;

pub use error::{Error, Result};
