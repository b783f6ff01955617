//! Simulators and calculators for coherent-state tele-amplification.
//!
//! Two state engines sit side by side:
//!
//! * [`optics::CoherentBranchState`] / [`optics::BranchDensity`] hold exact
//!   superpositions (and conditional mixtures) of multimode coherent
//!   products. Every overlap and every on/off or photon-number POVM matrix
//!   element has a closed form, so protocol outputs come out exact.
//! * [`fock::FockState`] / [`fock::FockEnsemble`] hold truncated number-basis
//!   vectors and Kraus-unravelled ensembles. They act as the numeric oracle
//!   and carry the imperfection model (squeezed-vacuum resource, lossy
//!   optics, inefficient heralding).
//!
//! Phase-space convention used throughout: vacuum quadrature variance 1/2,
//! `W_vac(0, 0) = 1/π`, and `|γ⟩` is centred at `(√2 Re γ, √2 Im γ)`.

// `!(x > y)` guards also reject NaN, which `x <= y` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod fock;
pub mod math;
pub mod optics;
pub mod protocol;
pub mod qkd;
pub mod qubit;
pub mod usd;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
