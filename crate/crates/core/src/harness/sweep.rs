//! One-dimensional parameter sweeps over a config.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::coop::{efficiency_closed_form, single_group_reflection};
use crate::ensemble::{mc_responses, mean_stderr, sample_trial};
use crate::error::{Error, Result};
use crate::params::{hz, Config, SystemParams};
use crate::scattering::{respond, AtomGroup, PortBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Full scattering matrix: the first sampled ensemble if the config has
    /// one, else a single collective group.
    #[default]
    ExactMatrix,
    /// Single-group closed forms with the ensemble linewidths.
    ClosedForm,
    /// Monte-Carlo average over the config's ensemble.
    MonteCarlo,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact_matrix" => Ok(Self::ExactMatrix),
            "closed" | "closed_form" => Ok(Self::ClosedForm),
            "mc" | "monte_carlo" => Ok(Self::MonteCarlo),
            _ => Err(Error::param("mode", format!("unknown mode `{s}` (exact, closed, mc)"))),
        }
    }
}

/// Sweepable paths. Rates and frequencies are in Hz as in the config file.
pub const VARIABLES: &[&str] = &[
    "probe.detuning_Hz",
    "pump.power_mW",
    "pump.rabi_Hz",
    "cavity_mw.kappa_e_ext_Hz",
    "cavity_mw.kappa_e_int_Hz",
    "cavity_mw.delta_ec_Hz",
    "cavity_opt.kappa_o_ext_Hz",
    "cavity_opt.kappa_o_int_Hz",
    "cavity_opt.delta_oc_Hz",
    "atoms.Gamma_o_Hz",
    "atoms.Gamma_e_Hz",
    "atoms.gamma_o_Hz",
    "atoms.gamma_s_Hz",
    "atoms.g_o_tot_Hz",
    "atoms.g_e_tot_Hz",
    "atoms.n_g",
    "atoms.n_e1",
    "atoms.n_e2",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec {
    pub variable: String,
    pub grid: Vec<f64>,
    /// Applied in order before the swept value.
    pub overrides: Vec<(String, f64)>,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub eta: f64,
    /// Microwave power reflection.
    pub refl: f64,
    pub noise_ratio: f64,
}

/// A system plus the probe detuning it is evaluated at (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub system: SystemParams,
    pub probe: f64,
}

/// Set `path` to `value` on a point built from `cfg`.
pub fn apply(point: &mut Point, cfg: &Config, path: &str, value: f64) -> Result<()> {
    let p = &mut point.system;
    match path {
        "probe.detuning_Hz" => point.probe = hz(value),
        "pump.power_mW" => {
            let cal = cfg
                .pump_calibration
                .ok_or_else(|| Error::param(path, "config has no pump calibration (rabi_Hz_per_sqrt_mW)"))?;
            if value < 0.0 {
                return Err(Error::param(path, "power must be >= 0"));
            }
            p.rabi = cal.rabi(value);
        }
        "pump.rabi_Hz" => p.rabi = hz(value),
        "cavity_mw.kappa_e_ext_Hz" => p.kappa_e_ext = hz(value),
        "cavity_mw.kappa_e_int_Hz" => p.kappa_e_int = hz(value),
        "cavity_mw.delta_ec_Hz" => p.delta_ec = hz(value),
        "cavity_opt.kappa_o_ext_Hz" => p.kappa_o_ext = hz(value),
        "cavity_opt.kappa_o_int_Hz" => p.kappa_o_int = hz(value),
        "cavity_opt.delta_oc_Hz" => p.delta_oc = hz(value),
        "atoms.Gamma_o_Hz" => p.inhom_o = hz(value),
        "atoms.Gamma_e_Hz" => p.inhom_e = hz(value),
        "atoms.gamma_o_Hz" => p.gamma_o = hz(value),
        "atoms.gamma_s_Hz" => p.gamma_s = hz(value),
        "atoms.g_o_tot_Hz" => p.g_o_tot = hz(value),
        "atoms.g_e_tot_Hz" => p.g_e_tot = hz(value),
        "atoms.n_g" => p.n_g = value,
        "atoms.n_e1" => p.n_e1 = value,
        "atoms.n_e2" => p.n_e2 = value,
        _ => {
            return Err(Error::param(
                "variable",
                format!("unknown path `{path}`; expected one of {}", VARIABLES.join(", ")),
            ))
        }
    }
    Ok(())
}

fn evaluate(cfg: &Config, point: &Point, mode: SweepMode) -> Result<(f64, f64, f64)> {
    let p = &point.system;
    p.validate()?;
    let metrics = |b: &PortBlock| (b.eta_m2o(), b.refl_mw(), b.noise_ratio());
    match mode {
        SweepMode::ExactMatrix => {
            let groups = match &cfg.ensemble {
                Some(spec) => sample_trial(spec, p, 0)?.groups,
                None => vec![AtomGroup::collective(p)],
            };
            Ok(metrics(&respond(&groups, p, point.probe)?))
        }
        SweepMode::ClosedForm => {
            let eq = p.single_atom_equivalent();
            Ok((
                efficiency_closed_form(p, point.probe),
                single_group_reflection(&eq, point.probe).norm_sqr(),
                p.kappa_e_int / p.kappa_e_ext,
            ))
        }
        SweepMode::MonteCarlo => {
            let spec = cfg
                .ensemble
                .as_ref()
                .ok_or_else(|| Error::param("ensemble", "monte_carlo mode needs an [ensemble] section"))?;
            let (blocks, _) = mc_responses(spec, p, point.probe)?;
            let col = |f: fn(&PortBlock) -> f64| mean_stderr(&blocks.iter().map(f).collect::<Vec<_>>()).0;
            Ok((
                col(PortBlock::eta_m2o),
                col(PortBlock::refl_mw),
                col(PortBlock::noise_ratio),
            ))
        }
    }
}

/// Evaluate every grid point in parallel; rows keep the grid order.
pub fn sweep(spec: &SweepSpec, cfg: &Config) -> Result<Vec<SweepRow>> {
    if spec.grid.is_empty() {
        return Err(Error::param("grid", "must be nonempty"));
    }
    if let Some(v) = spec.grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::param("grid", format!("non-finite value {v}")));
    }
    let mut base = Point {
        system: cfg.system.clone(),
        probe: 0.0,
    };
    for (path, value) in &spec.overrides {
        apply(&mut base, cfg, path, *value)?;
    }
    // reject a bad path once rather than per point
    apply(&mut base.clone(), cfg, &spec.variable, spec.grid[0])?;
    spec.grid
        .par_iter()
        .map(|&value| {
            let mut pt = base.clone();
            apply(&mut pt, cfg, &spec.variable, value)?;
            let (eta, refl, noise_ratio) = evaluate(cfg, &pt, spec.mode)?;
            Ok(SweepRow {
                value,
                eta,
                refl,
                noise_ratio,
            })
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// CSV with the swept variable's path as the first column header.
pub fn write_sweep_csv<W: Write>(variable: &str, rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    w.write_record([variable, "eta", "refl", "noise_ratio"]).map_err(io)?;
    for r in rows {
        w.write_record([r.value, r.eta, r.refl, r.noise_ratio].map(|v| format!("{v:.11e}")))
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::default_paper_config;
    use approx::assert_relative_eq;

    fn single_group_config() -> Config {
        Config {
            ensemble: None,
            ..default_paper_config()
        }
    }

    #[test]
    fn matches_direct_calls_in_order() {
        let cfg = single_group_config();
        let spec = SweepSpec {
            variable: "probe.detuning_Hz".into(),
            grid: linspace(-2e6, 2e6, 41),
            ..Default::default()
        };
        let rows = sweep(&spec, &cfg).unwrap();
        let group = [AtomGroup::collective(&cfg.system)];
        for (row, f) in rows.iter().zip(&spec.grid) {
            assert_eq!(row.value, *f);
            let b = respond(&group, &cfg.system, hz(*f)).unwrap();
            assert_eq!(row.eta, b.eta_m2o());
            assert_eq!(row.refl, b.refl_mw());
        }
    }

    #[test]
    fn closed_form_reflection_matches_matrix() {
        let cfg = single_group_config();
        let p = cfg.system.single_atom_equivalent();
        for f in linspace(-3e6, 3e6, 13) {
            let b = respond(&[AtomGroup::collective(&p)], &p, hz(f)).unwrap();
            let z = single_group_reflection(&p, hz(f));
            assert!((z - b.mw_reflection()).norm() < 1e-10, "{f}");
        }
    }

    #[test]
    fn homogeneous_modes_agree() {
        let mut cfg = single_group_config();
        cfg.system.gamma_o = cfg.system.inhom_o;
        cfg.system.gamma_s = cfg.system.inhom_e;
        let mut spec = SweepSpec {
            variable: "probe.detuning_Hz".into(),
            grid: linspace(-1e6, 1e6, 9),
            ..Default::default()
        };
        let exact = sweep(&spec, &cfg).unwrap();
        spec.mode = SweepMode::ClosedForm;
        let closed = sweep(&spec, &cfg).unwrap();
        for (a, b) in exact.iter().zip(&closed) {
            assert_relative_eq!(a.eta, b.eta, max_relative = 1e-9);
            assert_relative_eq!(a.refl, b.refl, max_relative = 1e-9);
            assert_relative_eq!(a.noise_ratio, b.noise_ratio, max_relative = 1e-9);
        }
    }

    #[test]
    fn low_coop_power_scaling_is_linear() {
        let mut cfg = single_group_config();
        cfg.system.g_o_tot *= 0.1;
        cfg.system.g_e_tot *= 0.1;
        let spec = SweepSpec {
            variable: "pump.power_mW".into(),
            grid: vec![1e-6, 1e-5],
            overrides: vec![("probe.detuning_Hz".into(), 0.0)],
            mode: SweepMode::ExactMatrix,
        };
        let rows = sweep(&spec, &cfg).unwrap();
        let ratio = rows[1].eta / rows[0].eta;
        assert!((ratio / 10.0 - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn bad_paths_and_grids() {
        let cfg = single_group_config();
        let mut spec = SweepSpec {
            variable: "atoms.nope".into(),
            grid: vec![1.0],
            ..Default::default()
        };
        assert!(sweep(&spec, &cfg).is_err());
        spec.variable = "atoms.n_g".into();
        spec.grid.clear();
        assert!(sweep(&spec, &cfg).is_err());
        spec.grid = vec![f64::NAN];
        assert!(sweep(&spec, &cfg).is_err());
        // populations out of range are caught by validation
        spec.grid = vec![1.5];
        assert!(sweep(&spec, &cfg).is_err());
        let mut nocal = cfg.clone();
        nocal.pump_calibration = None;
        spec.variable = "pump.power_mW".into();
        spec.grid = vec![1.0];
        assert!(sweep(&spec, &nocal).is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = [SweepRow {
            value: 1.0,
            eta: 0.5,
            refl: 0.25,
            noise_ratio: 0.3,
        }];
        let mut buf = Vec::new();
        write_sweep_csv("atoms.n_g", &rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("atoms.n_g,eta,refl,noise_ratio"));
        let fields: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields, vec![1.0, 0.5, 0.25, 0.3]);
    }
}
