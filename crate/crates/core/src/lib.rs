//! Numerics for qubit dynamical maps.
//!
//! The crate builds Pauli-dephasing mixtures, depolarizing and phase-covariant
//! (amplitude-damping type) maps, extracts the canonical decay rates of their
//! time-local master equations and classifies the resulting dynamics as
//! Markovian, eternally non-Markovian, quasi-eternally non-Markovian or not
//! completely positive.
//!
//! Module map:
//!
//! - [`algebra`]: Bloch vectors, density matrices, affine maps, Choi matrices
//!   and a small Hermitian eigensolver.
//! - [`families`]: parametrized map families and their snapshots.
//! - [`rates`]: decay rates via the weight formula, eigenvalue log-derivatives
//!   and a finite-difference generator.
//! - [`analysis`]: rate timelines, classification, CP screening,
//!   CP-divisibility and trace-distance witnesses.
//! - [`bloch`]: RK4 integration of the Bloch equations and positivity escape.

// Index loops mirror the matrix formulas; `!(x > 0.0)` rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod analysis;
pub mod bloch;
pub mod error;
pub mod families;
pub mod rates;

pub use error::{Error, Result};
