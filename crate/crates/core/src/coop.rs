//! Closed-form figures of merit: cooperativities, efficiencies, the resonant
//! effective χ⁽²⁾, absorption-derived optical cooperativity and pumped
//! populations.

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use statrs::function::erf::erf;

use crate::consts::{HBAR, PLANCK, SPEED_OF_LIGHT, VACUUM_PERMEABILITY, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::params::{MaterialParams, SystemParams};
use crate::quad;

/// Standard deviation of a Gaussian with the given full width at half maximum.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * LN_2).sqrt())
}

/// The three cooperativities and the modified atomic cooperativity.
///
/// Detuned cavities make C_e and C_o complex; the detunings they were built
/// with are kept so efficiency formulas can rebuild the matching cavity
/// extraction factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cooperativities {
    pub c_e: Complex64,
    pub c_o: Complex64,
    pub c_a: f64,
    /// C_a′ = C_a / ((1 + C_e)(1 + C_o)).
    pub c_a_mod: Complex64,
    pub delta_e: f64,
    pub delta_o: f64,
}

impl Cooperativities {
    fn assemble(c_e: Complex64, c_o: Complex64, c_a: f64, delta_e: f64, delta_o: f64) -> Self {
        Self {
            c_e,
            c_o,
            c_a,
            c_a_mod: c_a / ((1.0 + c_e) * (1.0 + c_o)),
            delta_e,
            delta_o,
        }
    }

    /// Scale C_e by (n_e1 − n_e2) and C_o by (n_g − n_e2), the population
    /// differences that multiply the coupling rows of the equations of motion.
    pub fn population_weighted(&self, p: &SystemParams) -> Self {
        Self::assemble(
            self.c_e * p.spin_population(),
            self.c_o * p.optical_population(),
            self.c_a,
            self.delta_e,
            self.delta_o,
        )
    }
}

/// C_e(δ) = 4g_e²/(Γ_e(κ_e + 2iδ_e)), C_o(δ) = 4g_o²/(Γ_o(κ_o + 2iδ_o)),
/// C_a = 4Ω²/(Γ_oΓ_e), all with the ensemble linewidths.
pub fn cooperativities(p: &SystemParams, delta_e: f64, delta_o: f64) -> Result<Cooperativities> {
    for (name, v) in [
        ("Gamma_e", p.inhom_e),
        ("Gamma_o", p.inhom_o),
        ("kappa_e", p.kappa_e()),
        ("kappa_o", p.kappa_o()),
    ] {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("{name} must be > 0 to form a cooperativity")));
        }
    }
    let kt_e = Complex64::new(p.kappa_e(), 2.0 * delta_e);
    let kt_o = Complex64::new(p.kappa_o(), 2.0 * delta_o);
    let c_e = 4.0 * p.g_e_tot * p.g_e_tot / (p.inhom_e * kt_e);
    let c_o = 4.0 * p.g_o_tot * p.g_o_tot / (p.inhom_o * kt_o);
    let c_a = 4.0 * p.rabi * p.rabi / (p.inhom_o * p.inhom_e);
    Ok(Cooperativities::assemble(c_e, c_o, c_a, delta_e, delta_o))
}

/// Nominal extraction ratios (κ_e,ext/κ_e, κ_o,ext/κ_o).
pub fn extraction_ratios(p: &SystemParams) -> (f64, f64) {
    (p.kappa_e_ext / p.kappa_e(), p.kappa_o_ext / p.kappa_o())
}

/// Extraction ratios κ_ext/|κ + 2iδ| for detuned cavities. With these,
/// the magnitude of [`efficiency_approx`] equals the exact single-group
/// efficiency at unit population factor.
pub fn extraction_ratios_detuned(p: &SystemParams, delta_e: f64, delta_o: f64) -> (f64, f64) {
    (
        p.kappa_e_ext / p.kappa_e().hypot(2.0 * delta_e),
        p.kappa_o_ext / p.kappa_o().hypot(2.0 * delta_o),
    )
}

/// Approximate end-to-end efficiency
/// r_e·r_o·|C_e/(1+C_e) · 4C_a′/(1+C_a′)² · C_o/(1+C_o)|.
pub fn efficiency_approx(c: &Cooperativities, r_e: f64, r_o: f64) -> Result<f64> {
    for (name, r) in [("r_e", r_e), ("r_o", r_o)] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::param(name, "extraction ratio must lie in [0, 1]"));
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let v =
        c.c_e / (one + c.c_e) * (4.0 * c.c_a_mod / ((one + c.c_a_mod) * (one + c.c_a_mod))) * (c.c_o / (one + c.c_o));
    Ok(r_e * r_o * v.norm())
}

fn population_factor(p: &SystemParams) -> Result<f64> {
    let n_o = p.optical_population();
    if n_o == 0.0 {
        return Err(Error::Domain(
            "n_g = n_e2: the optical population difference vanishes".into(),
        ));
    }
    Ok((p.spin_population() / n_o).abs())
}

/// Exact efficiency of one emitter whose linewidths are the ensemble ones:
/// (κ_o,ext/|κ̃_o|)(κ_e,ext/|κ̃_e|)·((n_e1−n_e2)/(n_g−n_e2))·|4C_eC_oC_a/D|²-form,
/// D = (1+C_e)(1+C_o)+C_a with population-weighted C_e, C_o and κ̃ = κ + 2iδ.
///
/// `c` holds unweighted cooperativities as returned by [`cooperativities`].
pub fn efficiency_single_atom_exact(c: &Cooperativities, p: &SystemParams) -> Result<f64> {
    let pf = population_factor(p)?;
    let w = c.population_weighted(p);
    let (r_e, r_o) = extraction_ratios_detuned(p, c.delta_e, c.delta_o);
    let d = (1.0 + w.c_e) * (1.0 + w.c_o) + w.c_a;
    Ok(r_e * r_o * pf * (4.0 * w.c_e * w.c_o * w.c_a).norm() / d.norm_sqr())
}

/// The same quantity written with C_a′:
/// C_e/(1+C_e) · C_o/(1+C_o) · 4C_a′/(1+C_a′)².
pub fn efficiency_single_atom_factored(c: &Cooperativities, p: &SystemParams) -> Result<f64> {
    let pf = population_factor(p)?;
    let w = c.population_weighted(p);
    let (r_e, r_o) = extraction_ratios_detuned(p, c.delta_e, c.delta_o);
    let v = w.c_e / (1.0 + w.c_e) * (w.c_o / (1.0 + w.c_o)) * 4.0 * w.c_a_mod / ((1.0 + w.c_a_mod) * (1.0 + w.c_a_mod));
    Ok(r_e * r_o * pf * v.norm())
}

/// Microwave-to-optical efficiency of one group with the per-ion linewidths
/// of `p`, sitting at the carrier, at the given probe detuning.
///
/// Closed-form solution of the 4×4 tridiagonal system; agrees with the
/// matrix solver for one group.
pub fn single_group_efficiency(p: &SystemParams, probe: f64) -> f64 {
    let i = Complex64::i();
    let d_a = 0.5 * p.kappa_o() + i * (p.delta_oc - probe);
    let d_o = 0.5 * p.gamma_o - i * probe;
    let d_s = 0.5 * p.gamma_s - i * probe;
    let d_b = 0.5 * p.kappa_e() + i * (p.delta_ec - probe);
    let n_o = p.optical_population();
    let n_e = p.spin_population();
    let go2 = p.g_o_tot * p.g_o_tot;
    let ge2 = p.g_e_tot * p.g_e_tot;
    let om2 = p.rabi * p.rabi;
    let det =
        d_a * d_o * d_s * d_b + go2 * n_o * d_s * d_b + om2 * d_a * d_b + ge2 * n_e * d_a * d_o + go2 * n_o * ge2 * n_e;
    p.kappa_o_ext * p.kappa_e_ext * go2 * om2 * ge2 * n_e * n_e / det.norm_sqr()
}

/// Microwave reflection amplitude of the same single-group system, as a
/// continued fraction from the optical cavity inward.
pub fn single_group_reflection(p: &SystemParams, probe: f64) -> Complex64 {
    let i = Complex64::i();
    let d_a = 0.5 * p.kappa_o() + i * (p.delta_oc - probe);
    let d_o = 0.5 * p.gamma_o - i * probe;
    let d_s = 0.5 * p.gamma_s - i * probe;
    let d_b = 0.5 * p.kappa_e() + i * (p.delta_ec - probe);
    let e_o = d_o + p.g_o_tot * p.g_o_tot * p.optical_population() / d_a;
    let e_s = d_s + p.rabi * p.rabi / e_o;
    p.kappa_e_ext / (d_b + p.g_e_tot * p.g_e_tot * p.spin_population() / e_s) - 1.0
}

/// The single-atom equation at a probe detuning: [`single_group_efficiency`]
/// with the ensemble linewidths standing in for the per-ion ones.
pub fn efficiency_closed_form(p: &SystemParams, probe: f64) -> f64 {
    single_group_efficiency(&p.single_atom_equivalent(), probe)
}

/// Effective resonant χ⁽²⁾ in pm/V: 4ρ d_p d_o μ / (ε₀ c h² Γ_e Γ_o), with the
/// linewidths in cyclic units as the h form requires.
pub fn chi2_eff(m: &MaterialParams, p: &SystemParams) -> f64 {
    let gamma_e_hz = p.inhom_e / TAU;
    let gamma_o_hz = p.inhom_o / TAU;
    let si = 4.0 * m.rho * m.d_p * m.d_o * m.mu_spin
        / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * PLANCK * PLANCK * gamma_e_hz * gamma_o_hz);
    si * 1e12
}

/// Low-cooperativity efficiency from an effective χ⁽²⁾ (pm/V):
/// (4ω_eω_o/(ε₀V₀))·χ²·P_p/(κ_eκ_oκ_p).
///
/// Only meaningful when every cooperativity is ≪ 1.
pub fn efficiency_low_coop_from_chi2(
    chi2_pm_per_v: f64,
    pump_power: f64,
    (kappa_e, kappa_o, kappa_p): (f64, f64, f64),
    mode_volume: f64,
    omega_e: f64,
    omega_o: f64,
) -> Result<f64> {
    for (name, v) in [
        ("chi2", chi2_pm_per_v),
        ("pump_power", pump_power),
        ("kappa_e", kappa_e),
        ("kappa_o", kappa_o),
        ("kappa_p", kappa_p),
        ("mode_volume", mode_volume),
        ("omega_e", omega_e),
        ("omega_o", omega_o),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::param(name, "must be finite and >= 0"));
        }
    }
    if kappa_e == 0.0 || kappa_o == 0.0 || kappa_p == 0.0 || mode_volume == 0.0 {
        return Err(Error::Domain("cavity rates and mode volume must be > 0".into()));
    }
    let chi = chi2_pm_per_v * 1e-12;
    Ok(
        4.0 * omega_e * omega_o / (VACUUM_PERMITTIVITY * mode_volume) * chi * chi * pump_power
            / (kappa_e * kappa_o * kappa_p),
    )
}

/// C_o = α_peak·L·F·η/π with the optical confinement factor η.
pub fn co_from_absorption(m: &MaterialParams) -> f64 {
    m.alpha_peak * m.crystal_length * m.finesse * m.optical_confinement / PI
}

/// Steady-state excited population of a driven two-level system:
/// (Ω²/(2γ₂γ₁)) / (1 + Δ²/γ₂² + Ω²/(γ₂γ₁)).
pub fn rho_ee_steady(delta: f64, rabi: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    if !(gamma1 > 0.0 && gamma2 > 0.0) {
        return Err(Error::Domain("gamma1 and gamma2 must be > 0".into()));
    }
    let s = rabi * rabi / (gamma1 * gamma2);
    Ok(0.5 * s / (1.0 + (delta / gamma2).powi(2) + s))
}

/// [`rho_ee_steady`] averaged over a Gaussian distribution of detunings with
/// standard deviation `sigma`, truncated and renormalized at ±5σ.
pub fn rho_ee_ensemble(rabi: f64, gamma1: f64, gamma2: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain("sigma_inhom must be > 0".into()));
    }
    rho_ee_steady(0.0, rabi, gamma1, gamma2)?;
    let s = rabi * rabi / (gamma1 * gamma2);
    let norm = 1.0 / (sigma * TAU.sqrt());
    // integrate in units of σ; split at the power-broadened core so the
    // adaptive rule sees the narrow feature when σ is large
    let core = (gamma2 * (1.0 + s).sqrt() / sigma).min(5.0);
    let f = |u: f64| {
        let delta = u * sigma;
        let rho = 0.5 * s / (1.0 + (delta / gamma2).powi(2) + s);
        rho * norm * sigma * (-0.5 * u * u).exp()
    };
    let mut total = 0.0;
    for (a, b) in [(-5.0, -core), (-core, core), (core, 5.0)] {
        total += quad::integrate(f, a, b, 1e-300, 1e-8)?;
    }
    let mass = erf(5.0 / 2f64.sqrt());
    Ok(total / mass)
}

/// Ensemble spin–resonator coupling:
/// √((ω_eμ₀/2ħ)·μ²·ρ·η·excited_fraction·manifold_fraction).
pub fn ge_tot(m: &MaterialParams, p: &SystemParams, excited_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&excited_fraction) {
        return Err(Error::param("excited_fraction", "must lie in [0, 1]"));
    }
    let g2 = p.omega_e * VACUUM_PERMEABILITY / (2.0 * HBAR)
        * m.mu_spin
        * m.mu_spin
        * m.rho
        * m.confinement_eta
        * excited_fraction
        * p.manifold_fraction;
    Ok(g2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_paper_params, hz};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn base() -> SystemParams {
        default_paper_params().0
    }

    prop_compose! {
        fn physical()(
            ke in 1e5..1e8f64, qe in 0.05..0.95f64,
            ko in 1e6..1e11f64, qo in 0.05..0.95f64,
            ge in 0.0..1e7f64, go in 0.0..1e9f64, rabi in 0.0..1e7f64,
            (gam_e, gam_o) in (1e4..1e7f64, 1e6..1e9f64),
            (de, d_o) in (-1e7..1e7f64, -1e9..1e9f64),
            a in 0.05..0.5f64, bfrac in 0.0..0.95f64,
        ) -> SystemParams {
            let n_e2 = bfrac * a.min(1.0 - 2.0 * a);
            SystemParams {
                kappa_e_ext: ke * qe, kappa_e_int: ke * (1.0 - qe),
                kappa_o_ext: ko * qo, kappa_o_int: ko * (1.0 - qo),
                gamma_o: gam_o, gamma_s: gam_e, inhom_o: gam_o, inhom_e: gam_e,
                omega_e: hz(3.37e9), omega_o: hz(3.045e14),
                g_o_tot: go, g_e_tot: ge, rabi,
                delta_oc: d_o, delta_ec: de,
                n_g: a, n_e1: a, n_e2,
                manifold_fraction: 1.0,
            }
        }
    }

    #[test]
    fn zero_coupling_gives_zero_ce() {
        let mut p = base();
        p.g_e_tot = 0.0;
        let c = cooperativities(&p, 0.0, 0.0).unwrap();
        assert_eq!(c.c_e, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pump_anchor() {
        let mut p = base();
        p.rabi = hz(0.90e6);
        let c = cooperativities(&p, 0.0, 0.0).unwrap();
        assert_relative_eq!(c.c_a, 0.22, max_relative = 0.01);
    }

    #[test]
    fn half_linewidth_detuning() {
        let p = base();
        let c0 = cooperativities(&p, 0.0, 0.0).unwrap();
        let c = cooperativities(&p, 0.5 * p.kappa_e(), 0.0).unwrap();
        assert_relative_eq!(c.c_e.norm(), c0.c_e.re / 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(c.c_e.arg(), -PI / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_linewidth_is_a_domain_error() {
        let mut p = base();
        p.inhom_e = 0.0;
        assert!(matches!(cooperativities(&p, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn unit_efficiency_limit() {
        let big = Complex64::new(1e12, 0.0);
        let c = Cooperativities {
            c_e: big,
            c_o: big,
            c_a: 0.0,
            c_a_mod: Complex64::new(1.0, 0.0),
            delta_e: 0.0,
            delta_o: 0.0,
        };
        assert_relative_eq!(efficiency_approx(&c, 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-11);
    }

    #[test]
    fn no_pump_no_conversion() {
        let mut p = base();
        p.rabi = 0.0;
        let c = cooperativities(&p, 0.0, 0.0).unwrap();
        assert_eq!(efficiency_approx(&c, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn strong_pump_population_factor_is_unity() {
        let p = base();
        assert_eq!(population_factor(&p).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_population_is_a_domain_error() {
        let mut p = base();
        p.n_g = 0.2;
        p.n_e2 = 0.2;
        let c = cooperativities(&p, 0.0, 0.0).unwrap();
        assert!(matches!(efficiency_single_atom_exact(&c, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn impedance_matched_maximum() {
        // C_a = (1+C_e)(1+C_o) puts C_a′ = 1, where 4x/(1+x)² peaks at 1
        let mut p = base();
        p.delta_ec = 0.0;
        p.kappa_e_int = p.kappa_e_ext;
        p.kappa_o_int = p.kappa_o_ext;
        let c0 = cooperativities(&p, 0.0, 0.0).unwrap();
        let (ce, co) = (c0.c_e.re * 0.5, c0.c_o.re * 0.5);
        p.rabi = ((1.0 + ce) * (1.0 + co) * p.inhom_o * p.inhom_e / 4.0).sqrt();
        let c = cooperativities(&p, 0.0, 0.0).unwrap();
        let eta = efficiency_single_atom_exact(&c, &p).unwrap();
        assert_relative_eq!(eta, 0.25 * ce * co / ((1.0 + ce) * (1.0 + co)), max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matches_cooperativity_route() {
        let p = base();
        let c = cooperativities(&p, p.delta_ec, p.delta_oc).unwrap();
        assert_relative_eq!(
            efficiency_single_atom_exact(&c, &p).unwrap(),
            efficiency_closed_form(&p, 0.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn cooperativity_form_with_detuning_aware_ratios_is_exact() {
        let p = base();
        let c = cooperativities(&p, p.delta_ec, p.delta_oc)
            .unwrap()
            .population_weighted(&p);
        let (r_e, r_o) = extraction_ratios_detuned(&p, p.delta_ec, p.delta_oc);
        assert_relative_eq!(
            efficiency_approx(&c, r_e, r_o).unwrap(),
            efficiency_closed_form(&p, 0.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn operating_point_cooperativity_form_is_near_reported_efficiency() {
        let p = base();
        // probe on the spin line, resonator detuned as in the experiment
        let c = cooperativities(&p, p.delta_ec, 0.0).unwrap().population_weighted(&p);
        let (r_e, r_o) = extraction_ratios(&p);
        let eta = efficiency_approx(&c, r_e, r_o).unwrap();
        assert!(eta > 0.011 / 2.0 && eta < 0.011 * 2.0, "eta = {eta}");
    }

    #[test]
    fn chi2_scaling() {
        let (p, m) = default_paper_params();
        let base = chi2_eff(&m, &p);
        let mut m2 = m.clone();
        m2.rho *= 2.0;
        assert_eq!(chi2_eff(&m2, &p), 2.0 * base);
        let mut p2 = p.clone();
        p2.inhom_o *= 2.0;
        assert_relative_eq!(chi2_eff(&m, &p2), 0.5 * base, max_relative = 1e-15);
    }

    #[test]
    fn chi2_reference_value() {
        let (p, m) = default_paper_params();
        let chi = chi2_eff(&m, &p);
        assert!((chi / 2e7 - 1.0).abs() < 0.3, "chi2 = {chi}");
    }

    #[test]
    fn low_coop_chi2_scaling() {
        let args = ((1e7, 1e9, 1e9), 1e-12, 2e10, 2e15);
        let f = |chi| efficiency_low_coop_from_chi2(chi, 1e-3, args.0, args.1, args.2, args.3).unwrap();
        assert_relative_eq!(f(2e7), 4.0 * f(1e7), max_relative = 1e-15);
        assert_eq!(f(0.0), 0.0);
    }

    #[test]
    fn absorption_cooperativity() {
        let (_, mut m) = default_paper_params();
        assert_relative_eq!(co_from_absorption(&m), 0.14, max_relative = 1e-12);
        assert!((m.alpha_peak - 550.0).abs() < 5.0);
        m.alpha_peak = 0.0;
        assert_eq!(co_from_absorption(&m), 0.0);
    }

    #[test]
    fn rho_ee_limits() {
        assert_eq!(rho_ee_steady(0.0, 0.0, 1.0, 2.0).unwrap(), 0.0);
        assert_relative_eq!(rho_ee_steady(0.0, 1e9, 1.0, 1.0).unwrap(), 0.5, max_relative = 1e-12);
        let (g1, g2) = (3.0, 7.0);
        let v = rho_ee_steady(g2, (g1 * g2).sqrt(), g1, g2).unwrap();
        assert_relative_eq!(v, 1.0 / 6.0, max_relative = 1e-14);
        assert!(rho_ee_steady(0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rho_ee_reference_value() {
        let v = rho_ee_ensemble(hz(1e6), 1.0 / 267e-6, 2.0 / 140e-9, fwhm_to_sigma(hz(92e6))).unwrap();
        assert!((v - 0.39).abs() < 0.02, "rho_ee = {v}");
    }

    #[test]
    fn rho_ee_narrow_distribution_limit() {
        let (om, g1, g2) = (hz(1e6), 1.0 / 267e-6, 2.0 / 140e-9);
        let v = rho_ee_ensemble(om, g1, g2, 1.0).unwrap();
        assert_relative_eq!(v, rho_ee_steady(0.0, om, g1, g2).unwrap(), max_relative = 1e-6);
        assert_eq!(rho_ee_ensemble(0.0, g1, g2, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn ge_tot_reference_values() {
        let (mut p, m) = default_paper_params();
        p.manifold_fraction = 1.0;
        assert_relative_eq!(ge_tot(&m, &p, 1.0).unwrap(), hz(2.42e6), max_relative = 0.01);
        p.manifold_fraction = 2.0 / 3.0;
        assert_relative_eq!(ge_tot(&m, &p, 0.39).unwrap(), hz(1.24e6), max_relative = 0.02);
        let mut m4 = m.clone();
        m4.rho *= 4.0;
        assert_relative_eq!(
            ge_tot(&m4, &p, 0.5).unwrap(),
            2.0 * ge_tot(&m, &p, 0.5).unwrap(),
            max_relative = 1e-15
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn factored_form_agrees(p in physical()) {
            let c = cooperativities(&p, p.delta_ec, p.delta_oc).unwrap();
            let a = efficiency_single_atom_exact(&c, &p).unwrap();
            let b = efficiency_single_atom_factored(&c, &p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{} vs {}", a, b);
        }

        #[test]
        fn exact_efficiency_is_bounded(p in physical()) {
            let c = cooperativities(&p, p.delta_ec, p.delta_oc).unwrap();
            prop_assert!(efficiency_single_atom_exact(&c, &p).unwrap() <= 1.0 + 1e-12);
        }

        #[test]
        fn approx_efficiency_is_bounded_on_resonance(p in physical(), r_e in 0.0..=1.0f64, r_o in 0.0..=1.0f64) {
            let c = cooperativities(&p, 0.0, 0.0).unwrap();
            prop_assert!(efficiency_approx(&c, r_e, r_o).unwrap() <= 1.0 + 1e-12);
        }

        #[test]
        fn low_cooperativity_limit(p in physical(), s_e in 1e-6..1e-3f64, s_o in 1e-6..1e-3f64, s_a in 1e-6..1e-3f64) {
            let mut p = p;
            p.delta_ec = 0.0;
            p.delta_oc = 0.0;
            // rescale couplings to hit the requested cooperativities
            p.g_e_tot = (s_e * p.inhom_e * p.kappa_e() / 4.0).sqrt();
            p.g_o_tot = (s_o * p.inhom_o * p.kappa_o() / 4.0).sqrt();
            p.rabi = (s_a * p.inhom_o * p.inhom_e / 4.0).sqrt();
            let c = cooperativities(&p, 0.0, 0.0).unwrap();
            let w = c.population_weighted(&p);
            let eta = efficiency_single_atom_exact(&c, &p).unwrap();
            let (r_e, r_o) = extraction_ratios(&p);
            let pf = p.spin_population() / p.optical_population();
            let lim = r_e * r_o * pf * 4.0 * w.c_e.re * w.c_o.re * w.c_a;
            prop_assert!((eta / lim - 1.0).abs() < 0.01);
        }

        #[test]
        fn rho_ee_monotone(om in 1e5..1e8f64, sigma in 1e6..1e9f64, f in 1.01..3.0f64) {
            let (g1, g2) = (1.0 / 267e-6, 2.0 / 140e-9);
            let v = rho_ee_ensemble(om, g1, g2, sigma).unwrap();
            prop_assert!(rho_ee_ensemble(om * f, g1, g2, sigma).unwrap() > v);
            prop_assert!(rho_ee_ensemble(om, g1, g2, sigma * f).unwrap() < v);
        }

        #[test]
        fn ge_tot_square_root_of_fraction(f in 0.0..=1.0f64) {
            let (p, m) = default_paper_params();
            let ratio = ge_tot(&m, &p, f).unwrap() / ge_tot(&m, &p, 1.0).unwrap();
            prop_assert!((ratio - f.sqrt()).abs() <= 4.0 * f64::EPSILON);
        }
    }
}
