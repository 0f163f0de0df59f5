// SPDX-License-Identifier: Apache-2.0

//! Quantum non-Gaussian coherence between pairs of oscillator Fock states.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] - truncated Fock-space states, analytic squeezed-displaced
//!   amplitudes and the coherence quantifier `C_{m,n}(ρ) = 2|⟨m|ρ|n⟩|`.
//! * [`optimizer`] - bounded multistart Nelder-Mead and Monte-Carlo
//!   verification of thresholds.
//! * [`thresholds`] - the classical / Gaussian / intrinsic / genuine
//!   threshold hierarchy and certification of measured coherences.
//! * [`channels`] - dephasing and heating channels, dephasing depth.
//! * [`ramsey`] - pulse-level spin⊗oscillator Ramsey simulation and
//!   Rabi-oscillation population fitting.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod fock;
pub mod optimizer;
pub mod ramsey;
pub mod scenario;
pub mod thresholds;

pub use error::{QngError, Result};
pub use fock::{CoreState, DensityMatrix, FockPair, GaussianParams, PureState};
pub use thresholds::{ThresholdKind, ThresholdResult, ThresholdStore};
