//! Noise channels: thermal occupations, HEMT calibration, the microwave
//! output spectrum of a spin-loaded resonator, the phonon-bottleneck
//! photoluminescence estimate and the added-noise budget.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::consts::{BOLTZMANN, HBAR};
use crate::error::{Error, Result};
use crate::harness::lm::{self, LmOptions};
use crate::params::{MaterialParams, SystemParams};
use crate::scattering::{added_noise_rti, build_system, solve_scattering, AtomGroup};

/// Bose–Einstein occupation 1/(e^{ħω/k_BT} − 1); zero at T = 0.
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::param("temperature", "must be >= 0"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * omega / (BOLTZMANN * temperature)).exp_m1())
}

/// Power at the end of an amplified line: ħωGB(n̄(T_N) + N_HEMT + ½), with
/// the bandwidth B in Hz.
pub fn hemt_output_power(t_n: f64, gain: f64, bandwidth: f64, n_hemt: f64, omega: f64) -> Result<f64> {
    if !(gain > 0.0 && bandwidth > 0.0) {
        return Err(Error::param("gain/bandwidth", "must be > 0"));
    }
    Ok(HBAR * omega * gain * bandwidth * (bose_occupation(omega, t_n)? + n_hemt + 0.5))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HemtFit {
    pub gain: f64,
    pub n_hemt: f64,
    /// Covariance of (gain, n_hemt).
    pub covariance: [[f64; 2]; 2],
    pub residual_norm: f64,
}

impl HemtFit {
    pub fn gain_stderr(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }
    pub fn n_hemt_stderr(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

/// Fit (G, N_HEMT) to samples of (T in K, P_out in W).
///
/// Residuals are relative, matching radiometer noise that scales with the
/// measured power; `residual_norm` is the RMS relative misfit. Needs at
/// least three samples over which n̄(T) changes by a factor of 2.
pub fn fit_hemt(samples: &[(f64, f64)], omega: f64, bandwidth: f64) -> Result<HemtFit> {
    const MODEL: &str = "hemt";
    if samples.len() < 3 {
        return Err(Error::fit(MODEL, "need at least 3 samples"));
    }
    if !(omega > 0.0 && bandwidth > 0.0) {
        return Err(Error::fit(MODEL, "omega and bandwidth must be > 0"));
    }
    let unit = HBAR * omega * bandwidth;
    let x: Vec<f64> = samples
        .iter()
        .map(|&(t, _)| Ok(bose_occupation(omega, t)? + 0.5))
        .collect::<Result<_>>()?;
    let y: Vec<f64> = samples.iter().map(|&(_, p)| p / unit).collect();
    let n_lo = x.iter().copied().fold(f64::INFINITY, f64::min) - 0.5;
    let n_hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) - 0.5;
    if !(n_hi >= 2.0 * n_lo) || n_hi == n_lo {
        return Err(Error::fit(
            MODEL,
            "temperatures too close: thermal occupation must vary by at least 2x",
        ));
    }

    // y = G·x + G·N is linear in (G, G·N); use that for the start point
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let g0 = sxy / sxx;
    if !(g0 > 0.0) {
        return Err(Error::fit(MODEL, "power does not rise with temperature"));
    }
    let n0 = (my - g0 * mx) / g0;

    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::fit(MODEL, "output powers must be > 0"));
    }
    // fit in units of the starting gain so both parameters are O(1)
    let res = lm::minimize(
        MODEL,
        |q: &[f64], r: &mut [f64]| {
            for i in 0..x.len() {
                r[i] = q[0] * g0 * (x[i] + q[1]) / y[i] - 1.0;
            }
        },
        &[1.0, n0],
        x.len(),
        &[(0.0, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)],
        &LmOptions::default(),
    )?;
    let c = &res.covariance;
    Ok(HemtFit {
        gain: res.x[0] * g0,
        n_hemt: res.x[1],
        covariance: [[c[(0, 0)] * g0 * g0, c[(0, 1)] * g0], [c[(1, 0)] * g0, c[(1, 1)]]],
        residual_norm: res.residual_norm / n.sqrt(),
    })
}

/// Complex spin loading C = g²N/(Γ/2 − iΔ_at) with N = n_e1 − n_e2, the
/// population difference of the probed spin transition.
pub fn spin_loading(p: &SystemParams, delta_at: f64) -> Complex64 {
    let n = p.spin_population();
    let c = p.g_e_tot * p.g_e_tot * n / Complex64::new(0.5 * p.inhom_e, -delta_at);
    debug_assert!(n < 0.0 || c.re >= 0.0, "absorptive spins must load with Re C >= 0");
    c
}

/// Normalized output noise spectral density of the spin-loaded resonator,
/// in photons per mode, at resonator detuning Δ and spin detuning Δ_at.
pub fn output_psd(p: &SystemParams, delta: f64, delta_at: f64, n_wg: f64, n_res: f64) -> f64 {
    let c = spin_loading(p, delta_at);
    let (kc, ki, k) = (p.kappa_e_ext, p.kappa_e_int, p.kappa_e());
    let dc = delta - c.im;
    let den = (0.5 * k + c.re).powi(2) + dc * dc;
    let refl = ((kc - ki - 2.0 * c.re).powi(2) / 4.0 + dc * dc) / den;
    refl * n_wg + ki * kc / den * n_res
}

/// The resonant simplification of [`output_psd`] in terms of
/// C_e = 4Ng²/(κΓ).
pub fn output_psd_resonant(c_e: f64, kappa_i: f64, kappa_c: f64, n_wg: f64, n_res: f64) -> f64 {
    let k = kappa_i + kappa_c;
    let d = (1.0 + c_e).powi(2);
    (1.0 - 2.0 * kappa_i / k - c_e).powi(2) / d * n_wg + 4.0 * kappa_i * kappa_c / (k * k) / d * n_res
}

/// Spin–phonon bath description. SI units, angular rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononBathParams {
    pub rho: f64,
    /// Sound velocity.
    pub nu: f64,
    pub omega: f64,
    /// Spin linewidth.
    pub gamma: f64,
    pub t_spin: f64,
    pub tau1: f64,
    pub tau_ph: f64,
    pub l_crystal: f64,
}

impl PhononBathParams {
    /// Phonon escape time taken as τ_ph = L/(2ν).
    pub fn new(rho: f64, nu: f64, omega: f64, gamma: f64, t_spin: f64, tau1: f64, l_crystal: f64) -> Result<Self> {
        let b = Self {
            rho,
            nu,
            omega,
            gamma,
            t_spin,
            tau1,
            tau_ph: l_crystal / (2.0 * nu),
            l_crystal,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho", self.rho),
            ("nu", self.nu),
            ("omega", self.omega),
            ("Gamma", self.gamma),
            ("T_spin", self.t_spin),
            ("tau1", self.tau1),
            ("tau_ph", self.tau_ph),
            ("L_crystal", self.l_crystal),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// b = (ρ·2πν³/(2ω²Γ))·tanh²(ħω/k_BT).
pub fn bottleneck_coefficient(b: &PhononBathParams) -> f64 {
    let x = HBAR * b.omega / (BOLTZMANN * b.t_spin);
    b.rho * 2.0 * PI * b.nu.powi(3) / (2.0 * b.omega * b.omega * b.gamma) * x.tanh().powi(2)
}

/// Bottlenecked direct-process relaxation rate 1/(τ₁ + (1+b)τ_ph), Hz.
pub fn direct_process_rate(b: &PhononBathParams) -> f64 {
    direct_process_rate_with(b, bottleneck_coefficient(b))
}

pub fn direct_process_rate_with(b: &PhononBathParams, coefficient: f64) -> f64 {
    1.0 / (b.tau1 + (1.0 + coefficient) * b.tau_ph)
}

/// Photoluminescence count rate t_init·R·ρ·V·ρ_e/T1·η_det, Hz.
pub fn pl_count_rate(
    rate: f64,
    t_init: f64,
    rho: f64,
    volume: f64,
    rho_e: f64,
    t1: f64,
    detection_eff: f64,
) -> Result<f64> {
    for (name, v) in [
        ("R", rate),
        ("t_init", t_init),
        ("rho", rho),
        ("V", volume),
        ("rho_e", rho_e),
        ("detection_eff", detection_eff),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::param(name, "must be finite and >= 0"));
        }
    }
    if !(t1 > 0.0) {
        return Err(Error::param("T1", "must be > 0"));
    }
    Ok(t_init * rate * rho * volume * rho_e / t1 * detection_eff)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NoiseBudget {
    pub n_th: f64,
    pub n_pl: f64,
    pub n_add_rti: f64,
    pub eta_used: f64,
}

/// Refer output-side noise photons per pulse to the input:
/// N_add = (N_th + N_PL)/η.
pub fn noise_budget(eta: f64, n_th: f64, n_pl: f64) -> Result<NoiseBudget> {
    if !(eta > 0.0) {
        return Err(Error::Domain("eta must be > 0 to refer noise to the input".into()));
    }
    if !(n_th >= 0.0 && n_pl >= 0.0) {
        return Err(Error::param("noise photons", "must be >= 0"));
    }
    Ok(NoiseBudget {
        n_th,
        n_pl,
        n_add_rti: (n_th + n_pl) / eta,
        eta_used: eta,
    })
}

/// Temperatures and photoluminescence inputs for a budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSettings {
    pub resonator_temperature: f64,
    pub waveguide_temperature: f64,
    pub spin_temperature: f64,
    /// Intrinsic spin–lattice time of the direct process, s.
    pub tau1: f64,
    /// Phonon path length used for τ_ph = L/(2ν), m.
    pub phonon_length: f64,
    /// Initialization (pump) time per shot, s.
    pub t_init: f64,
    /// Pumped volume, m³.
    pub pl_volume: f64,
    pub pl_excited_fraction: f64,
    /// Radiative lifetime of the emitting level, s.
    pub pl_lifetime: f64,
    /// Fraction of emitted PL that reaches the output mode.
    pub pl_collection_efficiency: f64,
    /// Detection window per shot, s.
    pub probe_window: f64,
}

impl NoiseSettings {
    pub fn operating_point() -> Self {
        Self {
            resonator_temperature: 0.5,
            waveguide_temperature: 0.1,
            spin_temperature: 0.5,
            tau1: 1e-6,
            phonon_length: 4e-3,
            t_init: 20e-6,
            pl_volume: PI * 20e-6 * 20e-6 * 8e-6,
            pl_excited_fraction: 0.05,
            pl_lifetime: 600e-6,
            pl_collection_efficiency: 1e-5,
            probe_window: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("resonator_temperature_K", self.resonator_temperature),
            ("waveguide_temperature_K", self.waveguide_temperature),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("spin_temperature_K", self.spin_temperature),
            ("tau1_s", self.tau1),
            ("phonon_length_m", self.phonon_length),
            ("t_init_s", self.t_init),
            ("pl_volume_m3", self.pl_volume),
            ("pl_lifetime_s", self.pl_lifetime),
            ("probe_window_s", self.probe_window),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        for (name, v) in [
            ("pl_excited_fraction", self.pl_excited_fraction),
            ("pl_collection_efficiency", self.pl_collection_efficiency),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Everything the `noise` command reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NoiseSummary {
    pub n_wg: f64,
    pub n_res: f64,
    pub eta_m2o: f64,
    pub noise_ratio: f64,
    /// Thermal added noise referred to the input from the S-matrix.
    pub n_add_thermal: f64,
    pub bottleneck: f64,
    pub tau_ph: f64,
    pub direct_rate_hz: f64,
    pub pl_rate_hz: f64,
    pub budget: NoiseBudget,
}

/// Thermal and photoluminescence noise of the collective single-group model
/// at the spin frequency.
pub fn evaluate(p: &SystemParams, m: &MaterialParams, s: &NoiseSettings) -> Result<NoiseSummary> {
    s.validate()?;
    let n_wg = bose_occupation(p.omega_e, s.waveguide_temperature)?;
    let n_res = bose_occupation(p.omega_e, s.resonator_temperature)?;
    let r = solve_scattering(&build_system(&[AtomGroup::collective(p)], p, 0.0)?)?;
    let n_add_thermal = added_noise_rti(&r, p, n_wg, n_res)?;

    let bath = PhononBathParams::new(
        m.rho,
        m.sound_velocity,
        p.omega_e,
        p.inhom_e,
        s.spin_temperature,
        s.tau1,
        s.phonon_length,
    )?;
    let b = bottleneck_coefficient(&bath);
    let rate = direct_process_rate_with(&bath, b);
    let pl = pl_count_rate(
        rate,
        s.t_init,
        m.rho,
        s.pl_volume,
        s.pl_excited_fraction,
        s.pl_lifetime,
        s.pl_collection_efficiency,
    )?;
    // output-side photons per shot
    let n_th = r.eta_m2o * n_add_thermal;
    let n_pl = pl * s.probe_window;
    let budget = noise_budget(r.eta_m2o, n_th, n_pl)?;
    Ok(NoiseSummary {
        n_wg,
        n_res,
        eta_m2o: r.eta_m2o,
        noise_ratio: r.noise_ratio,
        n_add_thermal,
        bottleneck: b,
        tau_ph: bath.tau_ph,
        direct_rate_hz: rate,
        pl_rate_hz: pl,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_paper_params, hz};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_bath() -> PhononBathParams {
        PhononBathParams::new(4e24, 4e3, hz(3.37e9), hz(160e3), 0.5, 1e-6, 4e-3).unwrap()
    }

    #[test]
    fn bose_values() {
        assert_eq!(bose_occupation(1e10, 0.0).unwrap(), 0.0);
        let omega = 1e10;
        let t = HBAR * omega / (BOLTZMANN * 2f64.ln());
        assert_relative_eq!(bose_occupation(omega, t).unwrap(), 1.0, max_relative = 1e-14);
        let n = bose_occupation(hz(3.37e9), 0.5).unwrap();
        assert_relative_eq!(n, 2.618, max_relative = 2e-3);
        let high_t = BOLTZMANN * 0.5 / (HBAR * hz(3.37e9)) - 0.5;
        assert!((n - high_t).abs() / n < 0.02);
        assert!(bose_occupation(1.0, -1.0).is_err());
    }

    #[test]
    fn hemt_vacuum_term() {
        let omega = hz(3.37e9);
        let p = hemt_output_power(0.0, 1e7, 1e6, 3.0, omega).unwrap();
        assert_relative_eq!(p, HBAR * omega * 1e7 * 1e6 * 3.5, max_relative = 1e-15);
        let p2 = hemt_output_power(1.0, 1e7, 2e6, 3.0, omega).unwrap();
        assert_relative_eq!(
            p2,
            2.0 * hemt_output_power(1.0, 1e7, 1e6, 3.0, omega).unwrap(),
            max_relative = 1e-15
        );
    }

    fn synthetic(gain: f64, n_hemt: f64) -> Vec<(f64, f64)> {
        let omega = hz(3.37e9);
        [0.02, 0.1, 0.3, 0.6, 1.0, 2.0, 4.0]
            .iter()
            .map(|&t| (t, hemt_output_power(t, gain, 1e6, n_hemt, omega).unwrap()))
            .collect()
    }

    #[test]
    fn hemt_noiseless_round_trip() {
        let f = fit_hemt(&synthetic(3.2e7, 8.5), hz(3.37e9), 1e6).unwrap();
        assert_relative_eq!(f.gain, 3.2e7, max_relative = 1e-6);
        assert_relative_eq!(f.n_hemt, 8.5, max_relative = 1e-6);
    }

    #[test]
    fn hemt_degenerate_temperatures() {
        let omega = hz(3.37e9);
        let p = hemt_output_power(1.0, 1e7, 1e6, 3.0, omega).unwrap();
        assert!(fit_hemt(&[(1.0, p), (1.0, p), (1.0, p)], omega, 1e6).is_err());
        assert!(fit_hemt(&[(1.0, p), (1.0, p)], omega, 1e6).is_err());
    }

    #[test]
    fn resonant_psd_matches_printed_form() {
        let p = default_paper_params().0;
        let c_e = 4.0 * p.spin_population() * p.g_e_tot.powi(2) / (p.kappa_e() * p.inhom_e);
        let a = output_psd(&p, 0.0, 0.0, 0.7, 2.2);
        let b = output_psd_resonant(c_e, p.kappa_e_int, p.kappa_e_ext, 0.7, 2.2);
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn critically_coupled_bare_cavity_emits_its_bath() {
        let mut p = default_paper_params().0;
        p.g_e_tot = 0.0;
        p.kappa_e_int = p.kappa_e_ext;
        assert_relative_eq!(output_psd(&p, 0.0, 0.0, 0.3, 1.7), 1.7, max_relative = 1e-14);
    }

    #[test]
    fn strong_spins_return_the_waveguide_noise() {
        let v = output_psd_resonant(1e8, 1.0, 3.0, 2.0, 5.0);
        assert_relative_eq!(v, 2.0, max_relative = 1e-7);
    }

    #[test]
    fn bottleneck_reference_band() {
        let b = bottleneck_coefficient(&reference_bath());
        assert!((1e7..=1e9).contains(&b), "b = {b}");
        assert_relative_eq!(reference_bath().tau_ph, 500e-9, max_relative = 1e-12);
        let r = direct_process_rate(&reference_bath());
        assert!((10e-3..=200e-3).contains(&r), "R = {r}");
    }

    #[test]
    fn bottleneck_limits() {
        let mut hot = reference_bath();
        hot.t_spin = 1e9;
        assert!(bottleneck_coefficient(&hot) < 1e-15 * bottleneck_coefficient(&reference_bath()));
        let mut dense = reference_bath();
        dense.rho *= 2.0;
        assert_relative_eq!(
            bottleneck_coefficient(&dense),
            2.0 * bottleneck_coefficient(&reference_bath()),
            max_relative = 1e-15
        );
        let bath = reference_bath();
        assert_eq!(direct_process_rate_with(&bath, 0.0), 1.0 / (bath.tau1 + bath.tau_ph));
    }

    #[test]
    fn pl_reference_band() {
        let r = direct_process_rate(&reference_bath());
        let v = PI * 20e-6 * 20e-6 * 8e-6;
        let c = pl_count_rate(r, 20e-6, 4e24, v, 0.05, 600e-6, 1e-5).unwrap();
        assert!((1.0..=100.0).contains(&c), "PL = {c}");
        assert_eq!(pl_count_rate(0.0, 20e-6, 4e24, v, 0.05, 600e-6, 1e-5).unwrap(), 0.0);
        let c2 = pl_count_rate(r, 20e-6, 4e24, v, 0.05, 600e-6, 2e-5).unwrap();
        assert_relative_eq!(c2, 2.0 * c, max_relative = 1e-15);
    }

    #[test]
    fn budget_arithmetic() {
        assert_eq!(noise_budget(0.1, 0.0, 0.0).unwrap().n_add_rti, 0.0);
        assert_relative_eq!(
            noise_budget(0.01, 0.01, 0.0024).unwrap().n_add_rti,
            1.24,
            max_relative = 1e-14
        );
        assert!(noise_budget(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn budget_matches_scattering_path_without_pl() {
        let (p, m) = default_paper_params();
        let mut s = NoiseSettings::operating_point();
        s.pl_collection_efficiency = 0.0;
        let out = evaluate(&p, &m, &s).unwrap();
        assert_relative_eq!(out.budget.n_add_rti, out.n_add_thermal, max_relative = 1e-12);
        assert_relative_eq!(
            out.n_add_thermal,
            out.n_wg + p.kappa_e_int / p.kappa_e_ext * out.n_res,
            max_relative = 1e-8
        );
    }

    proptest! {
        #[test]
        fn bare_cavity_is_a_lorentzian_filter(
            kc in 1e5..1e8f64, ki in 1e5..1e8f64, delta in -1e8..1e8f64,
            n_wg in 0.0..10.0f64, n_res in 0.0..10.0f64,
        ) {
            let mut p = default_paper_params().0;
            p.g_e_tot = 0.0;
            p.kappa_e_ext = kc;
            p.kappa_e_int = ki;
            let k = kc + ki;
            let den = k * k / 4.0 + delta * delta;
            let want = (((kc - ki) * (kc - ki) / 4.0 + delta * delta) * n_wg + kc * ki * n_res) / den;
            let got = output_psd(&p, delta, 0.0, n_wg, n_res);
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300));
        }

        #[test]
        fn bose_bounds(omega in 1e8..1e12f64, t in 1e-3..100.0f64) {
            let n = bose_occupation(omega, t).unwrap();
            prop_assert!(n >= 0.0);
            prop_assert!(n + 0.5 >= n.max(0.5));
            let x = HBAR * omega / (BOLTZMANN * t);
            if x <= 1.0 / 20.0 {
                prop_assert!(((1.0 / x - 0.5) / n - 1.0).abs() < 0.01);
            }
        }
    }
}
