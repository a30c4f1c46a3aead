//! CODATA 2018 constants in SI units.

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;
/// Planck constant (J s).
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = H / (2.0 * PI);
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Bohr magneton (J/T).
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Unified atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;

pub const GAUSS: f64 = 1e-4;
pub const THZ: f64 = 1e12;
