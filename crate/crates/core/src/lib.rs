// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant gate synthesis for coupled qubit registers and
//! differential sensitivity of the gate error to structured Hamiltonian
//! uncertainty.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: complex dense kernel (Pauli embeddings, step exponentials,
//!   Fréchet derivatives, Haar unitaries);
//! * [`problems`]: the nine benchmark register problems;
//! * [`dynamics`]: propagation and (perturbed) fidelity error;
//! * [`sensitivity`]: `Z` coefficients, `B_vu`, static bound, log-sensitivity;
//! * [`search`]: directed worst-case search for the largest tolerable
//!   perturbation `δ̄`;
//! * [`synthesis`]: quasi-Newton controller synthesis with exact gradients;
//! * [`stats`]: one-tailed Pearson and Kendall correlation tests;
//! * [`io`] and [`study`]: persistence formats and the batch pipelines the
//!   CLI drives.

pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod problems;
pub mod search;
pub mod sensitivity;
pub mod stats;
pub mod study;
pub mod synthesis;

pub use error::{Error, Result};
