//! Physical and numerical defaults shared by the library and the CLI.
//!
//! The full table is serialized into every run manifest.

use serde::{Deserialize, Serialize};

/// Interface layer thickness, nm.
pub const INTERFACE_THICKNESS_NM: f64 = 3.0;
/// Relative permittivity of the lossy oxide/contamination layers.
pub const INTERFACE_EPSILON: f64 = 10.0;
/// Nominal vacuum gap between the two chips, um.
pub const GAP_UM: f64 = 5.0;
/// Isotropic approximation of sapphire's relative permittivity.
pub const SUBSTRATE_EPSILON: f64 = 11.45;
/// Relative residual requested from the field solver.
pub const SOLVER_TOLERANCE: f64 = 1e-8;
/// Iteration cap for the field solver.
pub const SOLVER_MAX_ITER: usize = 50_000;
/// Default half-width of the charge basis (basis size is `2N + 1`).
pub const CHARGE_CUTOFF: usize = 35;
/// Junction critical-current sanity bound, A. Indium bumps carry more than
/// this; a Josephson junction never should.
pub const MAX_JUNCTION_CRITICAL_CURRENT: f64 = 10e-3;
/// Josephson energy used by sweeps when none is supplied, GHz.
pub const SWEEP_EJ_GHZ: f64 = 14.6;

/// Snapshot of all defaults, for manifests.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhysicalDefaults {
    pub interface_thickness_nm: f64,
    pub interface_epsilon: f64,
    pub gap_um: f64,
    pub substrate_epsilon: f64,
    pub solver_tolerance: f64,
    pub solver_max_iter: usize,
    pub charge_cutoff: usize,
    pub max_junction_critical_current_a: f64,
    pub sweep_ej_ghz: f64,
}

impl Default for PhysicalDefaults {
    fn default() -> Self {
        Self {
            interface_thickness_nm: INTERFACE_THICKNESS_NM,
            interface_epsilon: INTERFACE_EPSILON,
            gap_um: GAP_UM,
            substrate_epsilon: SUBSTRATE_EPSILON,
            solver_tolerance: SOLVER_TOLERANCE,
            solver_max_iter: SOLVER_MAX_ITER,
            charge_cutoff: CHARGE_CUTOFF,
            max_junction_critical_current_a: MAX_JUNCTION_CRITICAL_CURRENT,
            sweep_ej_ghz: SWEEP_EJ_GHZ,
        }
    }
}
