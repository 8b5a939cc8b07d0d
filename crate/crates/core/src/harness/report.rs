//! Summary of a configured device next to the reported figures.

use std::fmt::Write as _;

use serde::Serialize;

use crate::coop::{
    chi2_eff, cooperativities, efficiency_approx, efficiency_closed_form, extraction_ratios, fwhm_to_sigma, ge_tot,
    rho_ee_ensemble,
};
use crate::ensemble::sample_trial;
use crate::error::{Error, Result};
use crate::noise::{evaluate, NoiseSettings};
use crate::params::{hz, Config};
use crate::reference as r;
use crate::scattering::{respond, AtomGroup};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub reference: Option<f64>,
}

impl ReportRow {
    pub fn new(name: &str, value: f64, unit: &str, reference: Option<f64>) -> Self {
        Self {
            name: name.into(),
            value,
            unit: unit.into(),
            reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn from_rows(rows: Vec<ReportRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("report", "nothing to report"));
        }
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_table(&self) -> String {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
        let mut s = format!(
            "{:<w$}  {:>12}  {:<8}  {:>12}\n",
            "quantity", "value", "unit", "reference"
        );
        for row in &self.rows {
            let reference = row
                .reference
                .map(|v| format!("{v:>12.4e}"))
                .unwrap_or_else(|| format!("{:>12}", "-"));
            let _ = writeln!(
                s,
                "{:<w$}  {:>12.4e}  {:<8}  {reference}",
                row.name, row.value, row.unit
            );
        }
        s
    }
}

/// Peak of `f` over `grid`.
fn peak(grid: impl Iterator<Item = f64>, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::NEG_INFINITY);
    for x in grid {
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Headline numbers of `cfg` at its operating point.
pub fn device_report(cfg: &Config) -> Result<Report> {
    let p = &cfg.system;
    let m = &cfg.material;
    p.validate()?;
    m.validate()?;
    let probe_grid = || (-100..=100).map(|i| hz(i as f64 * 20e3));

    // first ensemble sample if configured; one collective group otherwise
    let groups = match &cfg.ensemble {
        Some(spec) => sample_trial(spec, p, 0)?.groups,
        None => vec![AtomGroup::collective(p)],
    };
    let (probe_peak, eta_peak) = peak(probe_grid(), |w| Ok(respond(&groups, p, w)?.eta_m2o()))?;
    let (_, eta_single) = peak(probe_grid(), |w| Ok(efficiency_closed_form(p, w)))?;

    let c = cooperativities(p, p.delta_ec, 0.0)?.population_weighted(p);
    let (r_e, r_o) = extraction_ratios(p);
    let eta_approx = efficiency_approx(&c, r_e, r_o)?;

    let gamma1 = 1.0 / m.t1_optical;
    let gamma2 = 2.0 / m.t2_optical;
    let rho = rho_ee_ensemble(
        hz(r::PUMP_RABI_ESTIMATE_HZ),
        gamma1,
        gamma2,
        fwhm_to_sigma(hz(r::OPTICAL_INHOMOGENEOUS_HZ)),
    )?;
    let g_e = ge_tot(m, p, rho)?;

    let mut rows = vec![
        ReportRow::new("eta_peak", eta_peak, "", Some(r::CW_EFFICIENCY)),
        ReportRow::new("probe_at_peak", probe_peak / std::f64::consts::TAU, "Hz", None),
        ReportRow::new("eta_single_atom", eta_single, "", None),
        ReportRow::new("eta_cooperativity", eta_approx, "", Some(r::CW_EFFICIENCY)),
        ReportRow::new("C_e", c.c_e.norm(), "", Some(r::COOPERATIVITY_E)),
        ReportRow::new("C_o", c.c_o.norm(), "", Some(r::COOPERATIVITY_O)),
        ReportRow::new("C_a", c.c_a, "", Some(r::COOPERATIVITY_A)),
        ReportRow::new("chi2", chi2_eff(m, p), "pm/V", Some(r::CHI2_PM_PER_V)),
        ReportRow::new("rho_ee", rho, "", Some(r::EXCITED_FRACTION)),
        ReportRow::new("g_e_tot", g_e / std::f64::consts::TAU, "Hz", Some(r::G_E_TOT_HZ)),
    ];
    let settings = cfg.noise.clone().unwrap_or_else(NoiseSettings::operating_point);
    let noise = evaluate(p, m, &settings)?;
    rows.extend([
        ReportRow::new(
            "N_add_thermal",
            noise.n_add_thermal,
            "photons",
            Some(r::ADDED_NOISE_RTI),
        ),
        ReportRow::new("bottleneck", noise.bottleneck, "", Some(r::BOTTLENECK_COEFFICIENT)),
        ReportRow::new(
            "direct_rate",
            noise.direct_rate_hz,
            "Hz",
            Some(r::DIRECT_PROCESS_RATE_HZ),
        ),
        ReportRow::new("pl_rate", noise.pl_rate_hz, "Hz", None),
        ReportRow::new("N_add_total", noise.budget.n_add_rti, "photons", None),
    ]);
    Report::from_rows(rows)
}
