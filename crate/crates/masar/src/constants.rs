//! CODATA physical constants (SI units).

/// Planck constant (J s), exact by SI definition.
pub const PLANCK: f64 = 6.62607015e-34;

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Boltzmann constant (J/K), exact.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Vacuum magnetic permeability (N/A^2), CODATA 2018.
pub const VACUUM_PERMEABILITY: f64 = 1.25663706212e-6;
