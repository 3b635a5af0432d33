//! Numerical core for studying spherically symmetric solutions of the focusing
//! wave equation `φ_tt = Δφ + φ^(2p+1)` outside a unit reflecting ball in odd
//! space dimension `d`, in the regime where the exponent is supercritical
//! (`p(d-2) > 2`).
//!
//! The crate is organized around one pipeline:
//!
//! * [`statics`] — the countable family of static solutions `φ_n`, found by
//!   phase-plane shooting in logarithmic coordinates;
//! * [`linstab`] — linearized radial spectrum of each `φ_n` (unstable modes,
//!   negative-direction counts, scaling zero mode);
//! * [`qnm`] — quasinormal (decaying) modes of the ground state, computed in
//!   characteristic coordinates by shooting from a resummed asymptotic series;
//! * [`pseudospectral`] — collocation discretization of the same linear
//!   operator, used for global spectra and linear evolution;
//! * [`evolution`] — nonlinear characteristic evolution on a spectral-element
//!   grid;
//! * [`threshold`] — bisection for the critical amplitude of a one-parameter
//!   family of initial data;
//! * [`fitting`] — extraction of growth rates, ringdown frequencies and tail
//!   exponents from time series.
//!
//! All solvers are generic over the [`num::Real`] arithmetic contract, with
//! `f64` as the default working precision and [`num::Dd`] (double-double,
//! ~31 significant digits) available where double precision is insufficient.

pub mod evolution;
pub mod fitting;
pub mod linstab;
pub mod model;
pub mod num;
pub mod pseudospectral;
pub mod qnm;
pub mod statics;
pub mod threshold;

pub use model::{DerivedConstants, Params};
