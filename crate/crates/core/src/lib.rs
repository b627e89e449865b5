//! Numerical engine for time-dependent quasi-Hermitian quantum mechanics.
//!
//! A non-Hermitian but diagonalizable Hamiltonian `H(t)` with real spectrum is
//! mapped onto a Hermitian partner `h(t) = Ω(t) H(t) Ω⁻¹(t)` by a dressing map
//! built from the biorthogonal eigensystem of `H(t)` and a set of free nonzero
//! coefficients `μₙ(t)`. The metric `Θ(t) = Ω†(t) Ω(t)` defines the physical
//! inner product. When `Ω` depends on time, kets are propagated by the
//! generator
//!
//! ```text
//! H_gen(t) = H(t) − i Ω⁻¹(t) Ω̇(t)
//! ```
//!
//! rather than by `H(t)` itself. This crate builds all of these objects,
//! integrates the right and left Schrödinger equations driven by `H_gen` and
//! `H_gen†`, and checks the resulting invariants (Θ-norm conservation,
//! equivalence with the manifestly unitary standard-space evolution,
//! quasi-Hermiticity of observables).
//!
//! Module map:
//!
//! - [`schedule`] and [`model`]: Hamiltonian families, observables and time
//!   schedules.
//! - [`spectral`]: biorthogonal eigensystems and continuity tracking.
//! - [`dressing`]: `Ω`, `Ω̇`, `Θ`, `h` and `H_gen`.
//! - [`evolution`]: RK4 integration of the twin equations and the diagonal
//!   standard-space propagator.
//! - [`verify`]: named invariant reports.
//! - [`scenario`] and [`run`]: scenario documents, orchestration, CSV output
//!   and parameter sweeps.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dressing;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod run;
pub mod scenario;
pub mod schedule;
pub mod spectral;
pub mod verify;

pub use error::{Error, ErrorKind, Result};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64;
