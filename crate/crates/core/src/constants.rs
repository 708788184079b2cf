//! CODATA 2018 physical constants in SI units.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum wave impedance.
pub const ETA_0: f64 = 376.730_313_668;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Atomic unit of electric dipole moment, e·a0.
pub const EA0: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;

pub const TWO_PI: f64 = 2.0 * PI;
