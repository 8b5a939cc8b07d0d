//! Physical parameters of one transducer and the structured-text config that
//! carries them.
//!
//! Everything inside the crate is angular: decay rates, linewidths, detunings,
//! couplings and carrier frequencies are rad/s. Config files use plain Hz and
//! mark such keys with an `_Hz` suffix; [`hz`] and [`to_hz`] are the only
//! conversion points.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consts::SPEED_OF_LIGHT;
use crate::ensemble::{EnsembleSpec, OpticalProfile, RadialProfile};
use crate::error::{Error, Result};
use crate::noise::NoiseSettings;
use crate::reference as r;

/// Cyclic frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn hz(f: f64) -> f64 {
    f * TAU
}

/// Angular frequency back to Hz.
///
/// Picks the double that maps back onto `omega` under [`hz`] whenever one
/// exists, so a config written from loaded parameters reloads bit-for-bit.
pub fn to_hz(omega: f64) -> f64 {
    let guess = omega / TAU;
    if !guess.is_finite() || hz(guess) == omega {
        return guess;
    }
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..4 {
        lo = lo.next_down();
        hi = hi.next_up();
        if hz(lo) == omega {
            return lo;
        }
        if hz(hi) == omega {
            return hi;
        }
    }
    guess
}

/// Rates, couplings and populations of one transducer. All rates in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub kappa_o_ext: f64,
    pub kappa_o_int: f64,
    pub kappa_e_ext: f64,
    pub kappa_e_int: f64,
    /// Optical homogeneous linewidth of one ion.
    pub gamma_o: f64,
    /// Spin homogeneous linewidth of one ion.
    pub gamma_s: f64,
    /// Optical inhomogeneous linewidth (FWHM) of the ensemble.
    pub inhom_o: f64,
    /// Spin inhomogeneous linewidth (FWHM) of the ensemble.
    pub inhom_e: f64,
    /// Microwave carrier (spin transition) frequency.
    pub omega_e: f64,
    /// Optical carrier frequency.
    pub omega_o: f64,
    pub g_o_tot: f64,
    pub g_e_tot: f64,
    /// Pump Rabi frequency.
    pub rabi: f64,
    /// Optical cavity frequency minus optical transition frequency.
    pub delta_oc: f64,
    /// Microwave resonator frequency minus spin transition frequency.
    pub delta_ec: f64,
    pub n_g: f64,
    pub n_e1: f64,
    pub n_e2: f64,
    pub manifold_fraction: f64,
}

impl SystemParams {
    pub fn kappa_o(&self) -> f64 {
        self.kappa_o_ext + self.kappa_o_int
    }

    pub fn kappa_e(&self) -> f64 {
        self.kappa_e_ext + self.kappa_e_int
    }

    /// Population difference on the optical signal transition, n_g − n_e2.
    pub fn optical_population(&self) -> f64 {
        self.n_g - self.n_e2
    }

    /// Population difference on the spin transition, n_e1 − n_e2.
    pub fn spin_population(&self) -> f64 {
        self.n_e1 - self.n_e2
    }

    /// Copy whose per-ion linewidths are the ensemble linewidths, i.e. the
    /// ensemble treated as one collective emitter.
    pub fn single_atom_equivalent(&self) -> Self {
        Self {
            gamma_o: self.inhom_o,
            gamma_s: self.inhom_e,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("kappa_o_ext", self.kappa_o_ext),
            ("kappa_o_int", self.kappa_o_int),
            ("kappa_e_ext", self.kappa_e_ext),
            ("kappa_e_int", self.kappa_e_int),
            ("gamma_o", self.gamma_o),
            ("gamma_s", self.gamma_s),
            ("Gamma_o", self.inhom_o),
            ("Gamma_e", self.inhom_e),
            ("omega_e", self.omega_e),
            ("omega_o", self.omega_o),
            ("g_o_tot", self.g_o_tot),
            ("g_e_tot", self.g_e_tot),
            ("Omega_pump", self.rabi),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("delta_oc", self.delta_oc), ("delta_ec", self.delta_ec)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        check_populations(self.n_g, self.n_e1, self.n_e2)?;
        if !(0.0..=1.0).contains(&self.manifold_fraction) {
            return Err(Error::param("manifold_fraction", "must lie in [0, 1]"));
        }
        if self.inhom_o < self.gamma_o {
            return Err(Error::param(
                "Gamma_o",
                "optical inhomogeneous linewidth narrower than homogeneous gamma_o",
            ));
        }
        if self.inhom_e < self.gamma_s {
            return Err(Error::param(
                "Gamma_e",
                "spin inhomogeneous linewidth narrower than homogeneous gamma_s",
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_populations(n_g: f64, n_e1: f64, n_e2: f64) -> Result<()> {
    for (name, v) in [("n_g", n_g), ("n_e1", n_e1), ("n_e2", n_e2)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(name, format!("population must lie in [0, 1], got {v}")));
        }
    }
    let total = n_g + n_e1 + n_e2;
    if total > 1.0 + 1e-12 {
        return Err(Error::param(
            "populations",
            format!("n_g + n_e1 + n_e2 = {total} exceeds 1"),
        ));
    }
    Ok(())
}

/// Material constants of the doped crystal. SI units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    /// Dopant number density, m⁻³.
    pub rho: f64,
    /// Pump transition dipole moment, C·m.
    pub d_p: f64,
    /// Signal transition dipole moment, C·m.
    pub d_o: f64,
    /// Spin magnetic dipole moment, J/T.
    pub mu_spin: f64,
    /// Peak absorption coefficient, m⁻¹.
    pub alpha_peak: f64,
    pub crystal_length: f64,
    pub finesse: f64,
    /// Fraction of the resonator magnetic energy inside the transduction volume.
    pub confinement_eta: f64,
    /// Fraction of the optical mode energy inside the doped crystal.
    pub optical_confinement: f64,
    pub sound_velocity: f64,
    pub t1_optical: f64,
    pub t2_optical: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho", self.rho),
            ("d_p", self.d_p),
            ("d_o", self.d_o),
            ("mu_spin", self.mu_spin),
            ("alpha_peak", self.alpha_peak),
            ("crystal_length", self.crystal_length),
            ("finesse", self.finesse),
            ("confinement_eta", self.confinement_eta),
            ("optical_confinement", self.optical_confinement),
            ("sound_velocity", self.sound_velocity),
            ("T1_optical", self.t1_optical),
            ("T2_optical", self.t2_optical),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.confinement_eta > 1.0 {
            return Err(Error::param("confinement_eta", "must be <= 1"));
        }
        if self.optical_confinement > 1.0 {
            return Err(Error::param("optical_confinement", "must be <= 1"));
        }
        Ok(())
    }
}

/// Square-root pump calibration: Ω = `rabi_per_sqrt_mw` · √(P / 1 mW).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpCalibration {
    /// rad/s per √mW.
    pub rabi_per_sqrt_mw: f64,
}

impl PumpCalibration {
    pub fn rabi(&self, power_mw: f64) -> f64 {
        self.rabi_per_sqrt_mw * power_mw.max(0.0).sqrt()
    }
}

/// Everything a config file can carry.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub system: SystemParams,
    pub material: MaterialParams,
    pub pump_calibration: Option<PumpCalibration>,
    pub ensemble: Option<EnsembleSpec>,
    pub noise: Option<NoiseSettings>,
}

// ---------------------------------------------------------------------------
// File schema

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavityMwSection {
    frequency_Hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_e_ext_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_e_int_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_e_Hz_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_e_ext_ratio: Option<f64>,
    #[serde(default)]
    delta_ec_Hz: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavityOptSection {
    frequency_Hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_o_ext_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_o_int_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_o_Hz_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_o_ext_ratio: Option<f64>,
    #[serde(default)]
    delta_oc_Hz: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomsSection {
    Gamma_o_Hz: f64,
    Gamma_e_Hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma_o_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma_s_Hz: Option<f64>,
    g_o_tot_Hz: f64,
    g_e_tot_Hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_e1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_e2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifold_fraction: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PumpSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rabi_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_mW: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rabi_Hz_per_sqrt_mW: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialSection {
    rho_m3: f64,
    d_p_Cm: f64,
    d_o_Cm: f64,
    mu_spin_JT: f64,
    alpha_peak_per_m: f64,
    crystal_length_m: f64,
    finesse: f64,
    confinement_eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optical_confinement: Option<f64>,
    sound_velocity_m_s: f64,
    T1_optical_s: f64,
    T2_optical_s: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_opt_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_spin_Hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beam_waist_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mw_profile_radius_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mw_profile_amplitude: Option<Vec<f64>>,
    n_groups: usize,
    n_trials: usize,
    seed: u64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    resonator_temperature_K: f64,
    waveguide_temperature_K: f64,
    spin_temperature_K: f64,
    tau1_s: f64,
    phonon_length_m: f64,
    t_init_s: f64,
    pl_volume_m3: f64,
    pl_excited_fraction: f64,
    pl_lifetime_s: f64,
    pl_collection_efficiency: f64,
    probe_window_s: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    cavity_mw: CavityMwSection,
    cavity_opt: CavityOptSection,
    atoms: AtomsSection,
    material: MaterialSection,
    pump: PumpSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseSection>,
}

fn split_kappa(
    section: &str,
    ext: Option<f64>,
    int: Option<f64>,
    total: Option<f64>,
    ratio: Option<f64>,
) -> Result<(f64, f64)> {
    match (ext, int, total, ratio) {
        (Some(e), Some(i), None, None) => Ok((hz(e), hz(i))),
        (None, None, Some(t), Some(q)) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::param(format!("{section}.ext_ratio"), "must lie in [0, 1]"));
            }
            let total = hz(t);
            Ok((total * q, total * (1.0 - q)))
        }
        (None, None, Some(t), None) => {
            // total alone: treat as critically coupled
            let total = hz(t);
            Ok((0.5 * total, 0.5 * total))
        }
        _ => Err(Error::param(
            section,
            "give either both *_ext_Hz and *_int_Hz, or *_Hz_total (optionally with *_ext_ratio)",
        )),
    }
}

impl ConfigFile {
    fn into_config(self) -> Result<Config> {
        let (kappa_e_ext, kappa_e_int) = split_kappa(
            "cavity_mw.kappa_e",
            self.cavity_mw.kappa_e_ext_Hz,
            self.cavity_mw.kappa_e_int_Hz,
            self.cavity_mw.kappa_e_Hz_total,
            self.cavity_mw.kappa_e_ext_ratio,
        )?;
        let (kappa_o_ext, kappa_o_int) = split_kappa(
            "cavity_opt.kappa_o",
            self.cavity_opt.kappa_o_ext_Hz,
            self.cavity_opt.kappa_o_int_Hz,
            self.cavity_opt.kappa_o_Hz_total,
            self.cavity_opt.kappa_o_ext_ratio,
        )?;

        let m = &self.material;
        let material = MaterialParams {
            rho: m.rho_m3,
            d_p: m.d_p_Cm,
            d_o: m.d_o_Cm,
            mu_spin: m.mu_spin_JT,
            alpha_peak: m.alpha_peak_per_m,
            crystal_length: m.crystal_length_m,
            finesse: m.finesse,
            confinement_eta: m.confinement_eta,
            optical_confinement: m.optical_confinement.unwrap_or(1.0),
            sound_velocity: m.sound_velocity_m_s,
            t1_optical: m.T1_optical_s,
            t2_optical: m.T2_optical_s,
        };
        material.validate()?;

        let pump_calibration = self.pump.rabi_Hz_per_sqrt_mW.map(|c| PumpCalibration {
            rabi_per_sqrt_mw: hz(c),
        });
        let rabi = match (self.pump.rabi_Hz, self.pump.power_mW, pump_calibration) {
            (Some(rabi), None, _) => hz(rabi),
            (None, Some(p), Some(cal)) => cal.rabi(p),
            (None, Some(_), None) => return Err(Error::param("pump.power_mW", "needs pump.rabi_Hz_per_sqrt_mW")),
            (Some(_), Some(_), _) => return Err(Error::param("pump", "give rabi_Hz or power_mW, not both")),
            (None, None, _) => return Err(Error::param("pump.rabi_Hz", "missing")),
        };

        let a = &self.atoms;
        let (n_g, n_e1, n_e2) = match (a.n_g, a.n_e1, a.n_e2) {
            (None, None, None) => (0.5, 0.5, 0.0),
            (g, e1, e2) => (g.unwrap_or(0.0), e1.unwrap_or(0.0), e2.unwrap_or(0.0)),
        };
        let system = SystemParams {
            kappa_o_ext,
            kappa_o_int,
            kappa_e_ext,
            kappa_e_int,
            gamma_o: a.gamma_o_Hz.map(hz).unwrap_or(2.0 / material.t2_optical),
            gamma_s: a.gamma_s_Hz.map(hz).unwrap_or(hz(a.Gamma_e_Hz)),
            inhom_o: hz(a.Gamma_o_Hz),
            inhom_e: hz(a.Gamma_e_Hz),
            omega_e: hz(self.cavity_mw.frequency_Hz),
            omega_o: hz(self.cavity_opt.frequency_Hz),
            g_o_tot: hz(a.g_o_tot_Hz),
            g_e_tot: hz(a.g_e_tot_Hz),
            rabi,
            delta_oc: hz(self.cavity_opt.delta_oc_Hz),
            delta_ec: hz(self.cavity_mw.delta_ec_Hz),
            n_g,
            n_e1,
            n_e2,
            manifold_fraction: a.manifold_fraction.unwrap_or(1.0),
        };
        system.validate()?;

        let ensemble = self
            .ensemble
            .map(|e| -> Result<EnsembleSpec> {
                let mw_profile = match (e.mw_profile_radius_m, e.mw_profile_amplitude) {
                    (None, None) => RadialProfile::Flat,
                    (Some(r), Some(a)) => RadialProfile::tabulated(r, a)?,
                    _ => {
                        return Err(Error::param(
                            "ensemble.mw_profile",
                            "radius and amplitude tables must be given together",
                        ))
                    }
                };
                let spec = EnsembleSpec {
                    sigma_opt: e
                        .sigma_opt_Hz
                        .map(hz)
                        .unwrap_or_else(|| crate::coop::fwhm_to_sigma(system.inhom_o)),
                    sigma_spin: e
                        .sigma_spin_Hz
                        .map(hz)
                        .unwrap_or_else(|| crate::coop::fwhm_to_sigma(system.inhom_e)),
                    optical_profile: match e.beam_waist_m {
                        Some(w) => OpticalProfile::Gaussian { waist: w },
                        None => OpticalProfile::Flat,
                    },
                    mw_profile,
                    n_groups: e.n_groups,
                    n_trials: e.n_trials,
                    seed: e.seed,
                };
                spec.validate()?;
                Ok(spec)
            })
            .transpose()?;

        let noise = self.noise.map(|n| NoiseSettings {
            resonator_temperature: n.resonator_temperature_K,
            waveguide_temperature: n.waveguide_temperature_K,
            spin_temperature: n.spin_temperature_K,
            tau1: n.tau1_s,
            phonon_length: n.phonon_length_m,
            t_init: n.t_init_s,
            pl_volume: n.pl_volume_m3,
            pl_excited_fraction: n.pl_excited_fraction,
            pl_lifetime: n.pl_lifetime_s,
            pl_collection_efficiency: n.pl_collection_efficiency,
            probe_window: n.probe_window_s,
        });
        if let Some(n) = &noise {
            n.validate()?;
        }

        Ok(Config {
            system,
            material,
            pump_calibration,
            ensemble,
            noise,
        })
    }

    fn from_config(c: &Config) -> Self {
        let s = &c.system;
        let m = &c.material;
        ConfigFile {
            cavity_mw: CavityMwSection {
                frequency_Hz: to_hz(s.omega_e),
                kappa_e_ext_Hz: Some(to_hz(s.kappa_e_ext)),
                kappa_e_int_Hz: Some(to_hz(s.kappa_e_int)),
                kappa_e_Hz_total: None,
                kappa_e_ext_ratio: None,
                delta_ec_Hz: to_hz(s.delta_ec),
            },
            cavity_opt: CavityOptSection {
                frequency_Hz: to_hz(s.omega_o),
                kappa_o_ext_Hz: Some(to_hz(s.kappa_o_ext)),
                kappa_o_int_Hz: Some(to_hz(s.kappa_o_int)),
                kappa_o_Hz_total: None,
                kappa_o_ext_ratio: None,
                delta_oc_Hz: to_hz(s.delta_oc),
            },
            atoms: AtomsSection {
                Gamma_o_Hz: to_hz(s.inhom_o),
                Gamma_e_Hz: to_hz(s.inhom_e),
                gamma_o_Hz: Some(to_hz(s.gamma_o)),
                gamma_s_Hz: Some(to_hz(s.gamma_s)),
                g_o_tot_Hz: to_hz(s.g_o_tot),
                g_e_tot_Hz: to_hz(s.g_e_tot),
                n_g: Some(s.n_g),
                n_e1: Some(s.n_e1),
                n_e2: Some(s.n_e2),
                manifold_fraction: Some(s.manifold_fraction),
            },
            material: MaterialSection {
                rho_m3: m.rho,
                d_p_Cm: m.d_p,
                d_o_Cm: m.d_o,
                mu_spin_JT: m.mu_spin,
                alpha_peak_per_m: m.alpha_peak,
                crystal_length_m: m.crystal_length,
                finesse: m.finesse,
                confinement_eta: m.confinement_eta,
                optical_confinement: Some(m.optical_confinement),
                sound_velocity_m_s: m.sound_velocity,
                T1_optical_s: m.t1_optical,
                T2_optical_s: m.t2_optical,
            },
            pump: PumpSection {
                rabi_Hz: Some(to_hz(s.rabi)),
                power_mW: None,
                rabi_Hz_per_sqrt_mW: c.pump_calibration.map(|p| to_hz(p.rabi_per_sqrt_mw)),
            },
            ensemble: c.ensemble.as_ref().map(|e| {
                let (radius, amplitude) = match &e.mw_profile {
                    RadialProfile::Flat => (None, None),
                    RadialProfile::Tabulated { radius, amplitude } => (Some(radius.clone()), Some(amplitude.clone())),
                };
                EnsembleSection {
                    sigma_opt_Hz: Some(to_hz(e.sigma_opt)),
                    sigma_spin_Hz: Some(to_hz(e.sigma_spin)),
                    beam_waist_m: match e.optical_profile {
                        OpticalProfile::Gaussian { waist } => Some(waist),
                        OpticalProfile::Flat => None,
                    },
                    mw_profile_radius_m: radius,
                    mw_profile_amplitude: amplitude,
                    n_groups: e.n_groups,
                    n_trials: e.n_trials,
                    seed: e.seed,
                }
            }),
            noise: c.noise.as_ref().map(|n| NoiseSection {
                resonator_temperature_K: n.resonator_temperature,
                waveguide_temperature_K: n.waveguide_temperature,
                spin_temperature_K: n.spin_temperature,
                tau1_s: n.tau1,
                phonon_length_m: n.phonon_length,
                t_init_s: n.t_init,
                pl_volume_m3: n.pl_volume,
                pl_excited_fraction: n.pl_excited_fraction,
                pl_lifetime_s: n.pl_lifetime,
                pl_collection_efficiency: n.pl_collection_efficiency,
                probe_window_s: n.probe_window,
            }),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_config()
    }

    /// Canonical form: explicit ext/int rates, explicit populations and
    /// linewidths, pump given as a Rabi frequency.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&ConfigFile::from_config(self)).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Load and validate the system and material parameters from a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<(SystemParams, MaterialParams)> {
    let c = Config::load(path)?;
    Ok((c.system, c.material))
}

// ---------------------------------------------------------------------------
// Headline device

/// Microwave external coupling ratio assumed for the headline device.
const MW_EXT_RATIO: f64 = 0.75;
/// Optical external coupling ratio assumed for the headline device.
const OPT_EXT_RATIO: f64 = 0.9;
/// Optical dipole moment assumed for both pump and signal arms, C·m.
const OPTICAL_DIPOLE_CM: f64 = 4.06e-32;
/// Spin magnetic moment giving 2π×2.42 MHz fully-excited ensemble coupling, J/T.
const SPIN_MOMENT_JT: f64 = 1.3026e-23;

/// The device of the main CW measurement.
///
/// Measured quantities are used directly. Parameters that the published text
/// does not print (extraction ratios, dipole moments, per-cavity coupling
/// strengths) are reconstructed from the reported cooperativities:
/// g_e and g_o are chosen so the population-weighted cooperativities at the
/// spin frequency equal C_e = 2.3 and C_o = 0.14, and the pump Rabi frequency
/// gives C_a = 0.22.
pub fn default_paper_params() -> (SystemParams, MaterialParams) {
    let c = default_paper_config();
    (c.system, c.material)
}

pub fn default_paper_config() -> Config {
    let inhom_o = hz(r::OPTICAL_INHOMOGENEOUS_HZ);
    let inhom_e = hz(r::SPIN_INHOMOGENEOUS_HZ);
    let kappa_e = hz(r::MW_KAPPA_HZ);
    let delta_ec = hz(r::MW_RESONATOR_DETUNING_HZ);

    let fsr = SPEED_OF_LIGHT * r::FRINGE_PERIOD_M / (r::OPTICAL_WAVELENGTH_M * r::OPTICAL_WAVELENGTH_M);
    let kappa_o = hz(fsr / r::FINESSE);

    let (n_g, n_e1, n_e2) = (0.5, 0.5, 0.0);
    // |C_e(δ_ec)| = 4 g² (n_e1 − n_e2) / (Γ_e |κ_e + 2iδ_ec|)
    let kappa_e_detuned = kappa_e.hypot(2.0 * delta_ec);
    let g_e_tot = (r::COOPERATIVITY_E * inhom_e * kappa_e_detuned / (4.0 * (n_e1 - n_e2))).sqrt();
    let g_o_tot = (r::COOPERATIVITY_O * inhom_o * kappa_o / (4.0 * (n_g - n_e2))).sqrt();
    let rabi = (r::COOPERATIVITY_A * inhom_o * inhom_e / 4.0).sqrt();

    let system = SystemParams {
        kappa_o_ext: OPT_EXT_RATIO * kappa_o,
        kappa_o_int: (1.0 - OPT_EXT_RATIO) * kappa_o,
        kappa_e_ext: MW_EXT_RATIO * kappa_e,
        kappa_e_int: (1.0 - MW_EXT_RATIO) * kappa_e,
        gamma_o: 2.0 / r::OPTICAL_T2_S,
        gamma_s: inhom_e,
        inhom_o,
        inhom_e,
        omega_e: hz(r::SPIN_FREQUENCY_HZ),
        omega_o: hz(SPEED_OF_LIGHT / r::OPTICAL_WAVELENGTH_M),
        g_o_tot,
        g_e_tot,
        rabi,
        delta_oc: 0.0,
        delta_ec,
        n_g,
        n_e1,
        n_e2,
        manifold_fraction: r::CW_MANIFOLD_FRACTION,
    };

    let material = MaterialParams {
        rho: r::ION_DENSITY_M3,
        d_p: OPTICAL_DIPOLE_CM,
        d_o: OPTICAL_DIPOLE_CM,
        mu_spin: SPIN_MOMENT_JT,
        // inverted from C_o = α L F η / π with the reported C_o
        alpha_peak: r::COOPERATIVITY_O * std::f64::consts::PI
            / (r::CRYSTAL_LENGTH_M * r::FINESSE * r::OPTICAL_CONFINEMENT),
        crystal_length: r::CRYSTAL_LENGTH_M,
        finesse: r::FINESSE,
        confinement_eta: r::MW_CONFINEMENT,
        optical_confinement: r::OPTICAL_CONFINEMENT,
        sound_velocity: r::SOUND_VELOCITY_M_S,
        t1_optical: r::OPTICAL_T1_S,
        t2_optical: r::OPTICAL_T2_S,
    };

    let rabi_per_sqrt_mw = rabi; // C_a = 0.22 was measured at 1 mW
    Config {
        ensemble: Some(EnsembleSpec::operating_point(&system)),
        noise: Some(NoiseSettings::operating_point()),
        system,
        material,
        pump_calibration: Some(PumpCalibration { rabi_per_sqrt_mw }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[cavity_mw]
frequency_Hz = 3.37e9
kappa_e_Hz_total = 3e6
kappa_e_ext_ratio = 0.5

[cavity_opt]
frequency_Hz = 3.045e14
kappa_o_ext_Hz = 8.7e10
kappa_o_int_Hz = 9.7e9

[atoms]
Gamma_o_Hz = 92e6
Gamma_e_Hz = 160e3
g_o_tot_Hz = 0.0
g_e_tot_Hz = 0.0

[material]
rho_m3 = 4e24
d_p_Cm = 4e-32
d_o_Cm = 4e-32
mu_spin_JT = 1.3e-23
alpha_peak_per_m = 550.0
crystal_length_m = 500e-6
finesse = 1.6
confinement_eta = 0.0027
sound_velocity_m_s = 4000.0
T1_optical_s = 267e-6
T2_optical_s = 140e-9

[pump]
rabi_Hz = 0.0
"#;

    #[test]
    fn total_kappa_is_converted_to_angular() {
        let c = Config::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.system.kappa_e(), TAU * 3e6);
        assert_eq!(c.system.inhom_o, TAU * 92e6);
    }

    #[test]
    fn populations_default_to_strong_pump_fixed_point() {
        let c = Config::from_toml_str(MINIMAL).unwrap();
        assert_eq!((c.system.n_g, c.system.n_e1, c.system.n_e2), (0.5, 0.5, 0.0));
        assert_eq!(c.system.gamma_o, 2.0 / 140e-9);
        assert_eq!(c.system.gamma_s, c.system.inhom_e);
    }

    #[test]
    fn zero_couplings_are_valid() {
        let c = Config::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.system.g_e_tot, 0.0);
        assert_eq!(c.system.g_o_tot, 0.0);
        assert_eq!(c.system.rabi, 0.0);
    }

    #[test]
    fn overfull_populations_are_rejected() {
        let text = MINIMAL.replace("g_e_tot_Hz = 0.0", "g_e_tot_Hz = 0.0\nn_g = 0.7\nn_e1 = 0.5");
        let err = Config::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("populations"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("finesse = 1.6", "finesse = 1.6\nfinese = 1.6");
        let err = Config::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("finese"), "{err}");
    }

    #[test]
    fn missing_field_is_named() {
        let text = MINIMAL.replace("finesse = 1.6\n", "");
        let err = Config::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("finesse"), "{err}");
    }

    #[test]
    fn narrow_inhomogeneous_line_is_rejected() {
        let text = MINIMAL.replace("Gamma_e_Hz = 160e3", "Gamma_e_Hz = 160e3\ngamma_s_Hz = 200e3");
        let err = Config::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("Gamma_e"), "{err}");
    }

    #[test]
    fn operating_point_defaults() {
        let (p, m) = default_paper_params();
        assert_eq!(p.inhom_o, TAU * 92e6);
        assert_eq!(p.inhom_e, TAU * 160e3);
        assert!((p.kappa_e() - TAU * 3e6).abs() < 1e-6);
        assert_eq!(m.confinement_eta, 0.0027);
        assert_eq!(m.t2_optical, 140e-9);
        assert_eq!(m.t1_optical, 267e-6);
        assert_eq!(m.rho, 4e24);
        assert_eq!(m.finesse, 1.6);
        assert_eq!(m.crystal_length, 500e-6);
        p.validate().unwrap();
        m.validate().unwrap();
    }

    #[test]
    fn to_hz_inverts_hz_exactly() {
        for &f in &[1.0, 3e6, 92e6, 160e3, 3.37e9, 7.1e6, 1.234_567_891e8, 0.1] {
            let w = hz(f);
            assert_eq!(hz(to_hz(w)), w);
        }
    }
}
