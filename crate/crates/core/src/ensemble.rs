//! Inhomogeneous ensembles: stratified sampling of atom groups and
//! Monte-Carlo averages of the exact solver over many samples.
//!
//! Each trial draws from its own ChaCha8 stream (`seed`, stream = trial
//! index), so results do not depend on how trials are spread over threads.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::coop::fwhm_to_sigma;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::scattering::{respond, AtomGroup, PortBlock};

/// Detunings are drawn from normals truncated at ±TRUNCATION·σ.
pub const TRUNCATION: f64 = 4.0;
/// Radii are drawn inside TRUNCATION_RADIUS beam waists.
const TRUNCATION_RADIUS: f64 = 2.0;

/// Transverse optical amplitude seen by the ions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalProfile {
    Flat,
    /// Field amplitude exp(−r²/w²).
    Gaussian {
        waist: f64,
    },
}

/// Radial profile of the microwave coupling, relative units.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    Flat,
    /// Piecewise-linear table, held constant past either end.
    Tabulated {
        radius: Vec<f64>,
        amplitude: Vec<f64>,
    },
}

impl RadialProfile {
    pub fn tabulated(radius: Vec<f64>, amplitude: Vec<f64>) -> Result<Self> {
        if radius.len() != amplitude.len() || radius.len() < 2 {
            return Err(Error::param(
                "mw_profile",
                "radius and amplitude tables need equal length >= 2",
            ));
        }
        if radius.windows(2).any(|w| !(w[1] > w[0])) || radius[0] < 0.0 {
            return Err(Error::param(
                "mw_profile_radius_m",
                "must be >= 0 and strictly increasing",
            ));
        }
        if amplitude.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::param("mw_profile_amplitude", "must be finite and >= 0"));
        }
        Ok(Self::Tabulated { radius, amplitude })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Flat => 1.0,
            Self::Tabulated { radius, amplitude } => {
                let j = radius.partition_point(|&x| x <= r);
                if j == 0 {
                    amplitude[0]
                } else if j == radius.len() {
                    amplitude[j - 1]
                } else {
                    let t = (r - radius[j - 1]) / (radius[j] - radius[j - 1]);
                    amplitude[j - 1] + t * (amplitude[j] - amplitude[j - 1])
                }
            }
        }
    }

    fn extent(&self) -> Option<f64> {
        match self {
            Self::Flat => None,
            Self::Tabulated { radius, .. } => radius.last().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    /// Optical inhomogeneous standard deviation, rad/s.
    pub sigma_opt: f64,
    /// Spin inhomogeneous standard deviation, rad/s.
    pub sigma_spin: f64,
    pub optical_profile: OpticalProfile,
    pub mw_profile: RadialProfile,
    pub n_groups: usize,
    pub n_trials: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_groups < 1 {
            return Err(Error::param("n_groups", "must be >= 1"));
        }
        if self.n_trials < 1 {
            return Err(Error::param("n_trials", "must be >= 1"));
        }
        for (name, v) in [("sigma_opt", self.sigma_opt), ("sigma_spin", self.sigma_spin)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        if let OpticalProfile::Gaussian { waist } = self.optical_profile {
            if !(waist > 0.0) || !waist.is_finite() {
                return Err(Error::param("beam_waist", "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Widths from the ensemble linewidths of `p`, a 20 µm Gaussian beam and
    /// a flat microwave profile; 100 groups, 1000 trials.
    pub fn operating_point(p: &SystemParams) -> Self {
        Self {
            sigma_opt: fwhm_to_sigma(p.inhom_o),
            sigma_spin: fwhm_to_sigma(p.inhom_e),
            optical_profile: OpticalProfile::Gaussian { waist: 20e-6 },
            mw_profile: RadialProfile::Flat,
            n_groups: 100,
            n_trials: 1000,
            seed: 1,
        }
    }

    /// Near-zero widths and flat profiles: every group identical.
    pub fn homogeneous(n_groups: usize, n_trials: usize, seed: u64) -> Self {
        Self {
            sigma_opt: 1e-12,
            sigma_spin: 1e-12,
            optical_profile: OpticalProfile::Flat,
            mw_profile: RadialProfile::Flat,
            n_groups,
            n_trials,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSample {
    pub groups: Vec<AtomGroup>,
    pub seed_used: u64,
}

/// One stratified draw per group: stratum j of k covers quantiles
/// [j/k, (j+1)/k), and an independent shuffle pairs strata across dimensions.
fn stratified_uniforms(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut u: Vec<f64> = (0..k).map(|j| (j as f64 + rng.random::<f64>()) / k as f64).collect();
    u.shuffle(rng);
    u
}

fn truncated_normal(unit: &Normal, u: f64, sigma: f64) -> f64 {
    let lo = unit.cdf(-TRUNCATION);
    let hi = unit.cdf(TRUNCATION);
    sigma * unit.inverse_cdf(lo + u * (hi - lo))
}

/// Draw trial `trial` of the ensemble described by `spec`.
pub fn sample_trial(spec: &EnsembleSpec, p: &SystemParams, trial: u64) -> Result<EnsembleSample> {
    spec.validate()?;
    let k = spec.n_groups;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial);

    let unit = Normal::standard();
    let u_opt = stratified_uniforms(&mut rng, k);
    let u_spin = stratified_uniforms(&mut rng, k);
    let u_rad = stratified_uniforms(&mut rng, k);

    // radius: equal-energy annuli of the beam intensity exp(−2r²/w²),
    // otherwise uniform in area over the tabulated microwave profile
    let radius = |u: f64| match (spec.optical_profile, spec.mw_profile.extent()) {
        (OpticalProfile::Gaussian { waist }, _) => {
            let f_max = -(-2.0 * TRUNCATION_RADIUS * TRUNCATION_RADIUS).exp_m1();
            (-0.5 * waist * waist * (-u * f_max).ln_1p()).sqrt()
        }
        (OpticalProfile::Flat, Some(r_max)) => r_max * u.sqrt(),
        (OpticalProfile::Flat, None) => 0.0,
    };

    let mut opt_amp = Vec::with_capacity(k);
    let mut mw_amp = Vec::with_capacity(k);
    for &u in &u_rad {
        let r = radius(u);
        opt_amp.push(match spec.optical_profile {
            OpticalProfile::Gaussian { waist } => (-(r * r) / (waist * waist)).exp(),
            OpticalProfile::Flat => 1.0,
        });
        mw_amp.push(spec.mw_profile.eval(r));
    }

    let sum_sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    let (so, se) = (sum_sq(&opt_amp), sum_sq(&mw_amp));
    if !(so > 0.0) || !(se > 0.0) {
        return Err(Error::Domain(
            "coupling profile vanishes at every sampled position".into(),
        ));
    }
    let g_o_scale = p.g_o_tot / so.sqrt();
    let g_e_scale = p.g_e_tot / se.sqrt();
    let rabi_scale = p.rabi / (so / k as f64).sqrt();

    let groups = (0..k)
        .map(|j| AtomGroup {
            delta_o: truncated_normal(&unit, u_opt[j], spec.sigma_opt),
            delta_e: truncated_normal(&unit, u_spin[j], spec.sigma_spin),
            g_o: g_o_scale * opt_amp[j],
            g_e: g_e_scale * mw_amp[j],
            rabi: rabi_scale * opt_amp[j],
            n_g: p.n_g,
            n_e1: p.n_e1,
            n_e2: p.n_e2,
            weight: 1,
        })
        .collect();
    Ok(EnsembleSample {
        groups,
        seed_used: spec.seed,
    })
}

/// The first trial's sample.
pub fn sample_ensemble(spec: &EnsembleSpec, p: &SystemParams) -> Result<EnsembleSample> {
    sample_trial(spec, p, 0)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean; absent with a single successful trial.
    pub stderr: Option<f64>,
    pub n_trials: usize,
    pub failures: usize,
}

/// Port responses of every successful trial, in trial order, plus the
/// number of failed solves. More than 1% failures abort.
pub fn mc_responses(spec: &EnsembleSpec, p: &SystemParams, probe: f64) -> Result<(Vec<PortBlock>, usize)> {
    spec.validate()?;
    let blocks: Vec<Option<PortBlock>> = (0..spec.n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let sample = sample_trial(spec, p, t).ok()?;
            respond(&sample.groups, p, probe)
                .inspect_err(|e| log::warn!("trial {t}: {e}"))
                .ok()
        })
        .collect();
    let ok: Vec<PortBlock> = blocks.into_iter().flatten().collect();
    let failures = spec.n_trials - ok.len();
    if failures * 100 > spec.n_trials || ok.is_empty() {
        return Err(Error::MonteCarlo {
            failures,
            trials: spec.n_trials,
        });
    }
    if failures > 0 {
        log::warn!("{failures} of {} trials failed and were skipped", spec.n_trials);
    }
    Ok((ok, failures))
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let stderr = (xs.len() > 1).then(|| {
        let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
        (var / n).sqrt()
    });
    (mean, stderr)
}

/// Mean microwave-to-optical efficiency over `spec.n_trials` samples.
///
/// Failed solves are skipped and counted; more than 1% failures abort.
pub fn mc_efficiency(spec: &EnsembleSpec, p: &SystemParams, probe: f64) -> Result<McEstimate> {
    let (blocks, failures) = mc_responses(spec, p, probe)?;
    let etas: Vec<f64> = blocks.iter().map(PortBlock::eta_m2o).collect();
    let (mean, stderr) = mean_stderr(&etas);
    Ok(McEstimate {
        mean,
        stderr,
        n_trials: spec.n_trials,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_groups: usize,
    pub mean_eta: f64,
    pub stderr: Option<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

/// [`mc_efficiency`] for each group count, otherwise keeping `spec`.
pub fn convergence_scan(
    spec: &EnsembleSpec,
    p: &SystemParams,
    probe: f64,
    group_counts: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if group_counts.is_empty() {
        return Err(Error::param("group_counts", "must be nonempty"));
    }
    if group_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("group_counts", "must be strictly ascending"));
    }
    group_counts
        .iter()
        .map(|&n_groups| {
            let s = EnsembleSpec {
                n_groups,
                ..spec.clone()
            };
            let est = mc_efficiency(&s, p, probe)?;
            Ok(ConvergenceRow {
                n_groups,
                mean_eta: est.mean,
                stderr: est.stderr,
                n_trials: s.n_trials,
                seed: s.seed,
            })
        })
        .collect()
}

/// CSV with columns n_groups, mean_eta, stderr, n_trials, seed. An absent
/// standard error is written as an empty field.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    w.write_record(["n_groups", "mean_eta", "stderr", "n_trials", "seed"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.n_groups.to_string(),
            format!("{:.11e}", r.mean_eta),
            r.stderr.map(|s| format!("{s:.11e}")).unwrap_or_default(),
            r.n_trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })
}
