//! Physical constants (CODATA 2018) and unit conversions.
//!
//! Every module pulls its constants from here so that conversions happen in
//! exactly one place.

use std::f64::consts::PI;

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Vacuum permittivity, F/m (CODATA 2018 recommended value).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Micrometers to meters.
pub const MICRON: f64 = 1e-6;
/// Nanometers to meters.
pub const NANOMETER: f64 = 1e-9;
/// Femtofarads to farads.
pub const FEMTOFARAD: f64 = 1e-15;
/// GHz to Hz.
pub const GHZ: f64 = 1e9;
/// MHz to Hz.
pub const MHZ: f64 = 1e6;

/// Charging energy `e^2 / 2C` expressed as a frequency (GHz).
pub fn charging_energy_ghz(capacitance: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * capacitance) / PLANCK / GHZ
}

/// Inverse of [`charging_energy_ghz`]: the capacitance (F) that yields `ec_ghz`.
pub fn capacitance_from_ec_ghz(ec_ghz: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * ec_ghz * GHZ * PLANCK)
}

/// Ideal parallel-plate capacitance `eps0 * eps_r * A / d` (SI units).
pub fn parallel_plate_capacitance(area_m2: f64, gap_m: f64, eps_r: f64) -> f64 {
    VACUUM_PERMITTIVITY * eps_r * area_m2 / gap_m
}
