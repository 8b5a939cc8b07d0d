//! Reported device values used as defaults and as the reference column of
//! run reports. Frequencies here are cyclic (Hz); convert with
//! [`crate::params::hz`].

/// Optical inhomogeneous linewidth, Hz.
pub const OPTICAL_INHOMOGENEOUS_HZ: f64 = 92e6;
/// Spin inhomogeneous linewidth, Hz.
pub const SPIN_INHOMOGENEOUS_HZ: f64 = 160e3;
/// Microwave resonator total decay rate, Hz.
pub const MW_KAPPA_HZ: f64 = 3e6;
/// Microwave resonator frequency offset from the spin in the CW data, Hz.
pub const MW_RESONATOR_DETUNING_HZ: f64 = -7.1e6;
/// Spin transition frequency, Hz.
pub const SPIN_FREQUENCY_HZ: f64 = 3.37e9;
/// Optical transition wavelength, m.
pub const OPTICAL_WAVELENGTH_M: f64 = 984.5e-9;
/// Period of the chip Fabry-Perot fringes, m.
pub const FRINGE_PERIOD_M: f64 = 0.5e-9;

pub const FINESSE: f64 = 1.6;
pub const CRYSTAL_LENGTH_M: f64 = 500e-6;
/// Fraction of resonator magnetic energy inside the transduction volume.
pub const MW_CONFINEMENT: f64 = 0.0027;
/// Optical mode filling of the doped crystal.
pub const OPTICAL_CONFINEMENT: f64 = 1.0;
pub const ION_DENSITY_M3: f64 = 4e24;
pub const OPTICAL_T1_S: f64 = 267e-6;
pub const OPTICAL_T2_S: f64 = 140e-9;
pub const SOUND_VELOCITY_M_S: f64 = 4e3;
/// Population left in the transduction manifold under CW heating.
pub const CW_MANIFOLD_FRACTION: f64 = 2.0 / 3.0;

pub const COOPERATIVITY_E: f64 = 2.3;
pub const COOPERATIVITY_O: f64 = 0.14;
pub const COOPERATIVITY_A: f64 = 0.22;
pub const CW_EFFICIENCY: f64 = 1.1e-2;
pub const PULSED_EFFICIENCY: f64 = 0.76e-2;
/// Effective resonant χ⁽²⁾, pm/V.
pub const CHI2_PM_PER_V: f64 = 2e7;
pub const EXCITED_FRACTION: f64 = 0.39;
/// Ensemble spin coupling with every ion excited, Hz.
pub const G_E_ALL_HZ: f64 = 2.42e6;
/// Ensemble spin coupling at the CW operating point, Hz.
pub const G_E_TOT_HZ: f64 = 1.24e6;
/// Spin coupling extracted from reflection spectra, Hz.
pub const G_E_MEASURED_HZ: f64 = 1.3e6;
/// Pump Rabi frequency used for the excited-population estimate, Hz.
pub const PUMP_RABI_ESTIMATE_HZ: f64 = 1e6;
pub const ADDED_NOISE_RTI: f64 = 1.24;
pub const BOTTLENECK_COEFFICIENT: f64 = 1e8;
/// Spin-phonon direct-process rate, Hz.
pub const DIRECT_PROCESS_RATE_HZ: f64 = 50e-3;
/// Gaussian envelope of the dual-transducer interference, s.
pub const ENVELOPE_DUAL_S: f64 = 596e-6;
/// Gaussian envelope of the cascaded O2M-M2O correlation, s.
pub const ENVELOPE_CASCADE_S: f64 = 359e-6;
/// Pump offset between the two interfering transducers, Hz.
pub const INTERFERENCE_OFFSET_HZ: f64 = 50e3;
/// Linewidth of the photoluminescence excitation spectrum, Hz.
pub const PL_EXCITATION_LINEWIDTH_HZ: f64 = 68e6;
