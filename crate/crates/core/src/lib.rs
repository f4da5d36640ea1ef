//! Design and analysis toolkit for flip-chip vacuum-gap transmons ("flipmons")
//! and planar transmons.
//!
//! The pipeline mirrors how a device is evaluated:
//!
//! 1. [`geometry`] describes a layered chip stack as axis-aligned cuboids with
//!    named conductor nets, and classifies metal/substrate/air surfaces.
//! 2. [`solver`] meshes the stack on a rectilinear grid, solves
//!    `div(eps grad phi) = 0` with preconditioned conjugate gradients and
//!    extracts energies, charges and the Maxwell capacitance matrix.
//! 3. [`participation`] turns a field solution into bulk and thin-interface
//!    energy participation ratios.
//! 4. [`transmon`] maps capacitances and junction parameters to spectra by
//!    exact charge-basis diagonalization, and fits measured spectra.
//! 5. [`loss`] builds dielectric loss / T1 budgets and extracts loss tangents
//!    and coupling strengths from measured records.
//!
//! [`cli`] ties these together into reproducible batch runs; the `flipmon`
//! binary is a thin wrapper around it.

pub mod cli;
pub mod constants;
pub mod defaults;
pub mod geometry;
pub mod loss;
pub mod participation;
pub mod records;
pub mod render;
pub mod solver;
pub mod transmon;
pub mod tridiag;

pub use geometry::{DeviceGeometry, ValidatedGeometry};
pub use participation::{ParticipationReport, RegionId};
pub use solver::{CapacitanceMatrix, FieldSolution, RectilinearGrid};
