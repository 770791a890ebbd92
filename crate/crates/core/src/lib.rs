//! Energy-stable finite-element time stepping for the parabolic-parabolic
//! Keller-Segel model with volume filling.
//!
//! The cell density `u` follows a gradient flow with mobility `u(1-u)`; the
//! nonlinear entropy part of the energy is carried by a scalar auxiliary
//! variable `r`, which turns every time step into one diagonal solve for `u`,
//! one closed-form scalar solve, and one constant SPD solve for the
//! chemoattractant `c`. A modified discrete energy decays monotonically and
//! the lumped cell mass is conserved to rounding.
//!
//! The crate is `no_std` (it needs `alloc`) and does no IO. File formats,
//! configuration and the command-line runner live in the `kssav` crate.
//!
//! Modules, bottom-up:
//!
//! - [`mesh`]: interval and structured triangle meshes, acuteness check, quality metrics
//! - [`sparse`]: CSR matrices, skyline Cholesky, Jacobi-preconditioned CG
//! - [`assembly`]: P1 mass, lumped mass, stiffness, mobility-weighted stiffness
//! - [`model`]: parameters, mobility, regularized entropy, SAV energy
//! - [`stepper`]: one SAV time step
//! - [`diagnostics`]: modified energy, dissipation, mass, stability monitors

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod mesh;
pub mod model;
pub mod sparse;
pub mod stepper;

pub use assembly::{AssembledOperators, MobilityAssembler, MobilityOperator};
pub use diagnostics::{EnergyRecord, StabilityReport};
pub use error::{Error, Result};
pub use mesh::{Mesh, MeshMetrics};
pub use model::{EntropyEval, ModelParams};
pub use sparse::CsrMatrix;
pub use stepper::{COperator, CSolverKind, SavStepper, State, StepReport};
