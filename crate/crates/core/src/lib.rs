//! Digital-analog quantum simulation of the spin-1/2 Heisenberg model on a
//! trapped-ion chain.
//!
//! The crate is organised bottom-up:
//!
//! - [`spin_algebra`]: dense operators, states and propagators on the `2^N`
//!   spin space.
//! - [`ion_chain`]: equilibrium positions, transverse normal modes,
//!   Lamb-Dicke parameters and the phonon-mediated coupling matrix.
//! - [`spin_models`]: Heisenberg, XX, YY, ZZ and XY Hamiltonians built from a
//!   coupling matrix.
//! - [`evolution`]: exact, fully digital and digital-analog (DAQS) evolution,
//!   plus the first-order Trotter error bound.
//! - [`spin_phonon`]: spin⊗Fock simulation of the bichromatic analog blocks
//!   and their fidelity against the ideal effective Hamiltonians.
//! - [`protocol`]: gate accounting, region-wise Trotter-step optimisation,
//!   configuration files and CSV artifacts.
//!
//! Conventions used throughout: site 0 is the leftmost tensor factor (most
//! significant bit of a basis index) and `|↑⟩`, the `+1` eigenstate of
//! `σ^z`, is local basis index 0.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod ion_chain;
pub mod protocol;
pub mod spin_algebra;
pub mod spin_models;
pub mod spin_phonon;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
