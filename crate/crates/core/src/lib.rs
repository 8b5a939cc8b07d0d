//! Steady-state model of a microwave-to-optical transducer built from a
//! rare-earth-ion ensemble sitting inside a microwave resonator and a weak
//! optical cavity.
//!
//! The crate is organised the way the calculation flows:
//!
//! * [`params`] owns every physical input and the unit conventions
//!   (rates and frequencies are angular, rad/s, everywhere past the config
//!   loader).
//! * [`coop`] holds the closed-form algebra: cooperativities, efficiencies,
//!   the effective resonant χ⁽²⁾ and the pumped-population estimates.
//! * [`scattering`] builds and solves the linear input–output system for any
//!   number of atom groups.
//! * [`ensemble`] samples inhomogeneous ensembles and runs Monte-Carlo
//!   averages on top of the scattering solver.
//! * [`noise`] covers thermometry, the Tavis-Cummings output spectrum, the
//!   phonon-bottleneck photoluminescence estimate and the noise budget.
//! * [`harness`] contains sweeps, phenomenological fits and reporting used by
//!   the command line front end.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coop;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod params;
pub mod quad;
pub mod reference;
pub mod scattering;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Physical constants (CODATA 2018, exact where the SI defines them).
pub mod consts {
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const HBAR: f64 = PLANCK / std::f64::consts::TAU;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;
}
