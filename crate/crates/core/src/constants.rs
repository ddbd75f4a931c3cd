//! Physical constants (CODATA 2018 exact or recommended values, SI units).

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant, J·s.
pub const PLANCK: f64 = 2.0 * PI * HBAR;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Mass of a rubidium-87 atom, kg.
pub const RB87_MASS: f64 = 1.443_160_6e-25;
