//! Phenomenological fits: Lorentzian lines, cascaded (product) lines, the
//! two-device interference envelope and hybridized resonator reflection.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::lm::{self, LmOptions, LmResult};
use crate::params::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub at_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: String,
    pub params: Vec<FitParam>,
    pub residual_norm: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter; panics on an unknown name.
    pub fn value(&self, name: &str) -> f64 {
        self.param(name)
            .unwrap_or_else(|| panic!("no parameter `{name}` in {} fit", self.model))
            .value
    }

    fn from_lm(model: &str, names: &[String], res: &LmResult, n_points: usize) -> Self {
        Self {
            model: model.to_string(),
            params: names
                .iter()
                .enumerate()
                .map(|(i, n)| FitParam {
                    name: n.clone(),
                    value: res.x[i],
                    stderr: res.stderr(i),
                    at_bound: res.at_bound[i],
                })
                .collect(),
            residual_norm: res.residual_norm,
            n_points,
        }
    }
}

const FREE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);
const POSITIVE: (f64, f64) = (f64::MIN_POSITIVE, f64::INFINITY);

fn check_points(model: &str, points: &[(f64, f64)], min: usize) -> Result<()> {
    if points.len() < min {
        return Err(Error::fit(
            model,
            format!("need at least {min} points, got {}", points.len()),
        ));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::fit(model, "non-finite data"));
    }
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lorentzian with peak height `amplitude` and full width `fwhm`.
pub fn lorentzian(x: f64, center: f64, fwhm: f64, amplitude: f64) -> f64 {
    let h = 0.5 * fwhm;
    amplitude * h * h / ((x - center).powi(2) + h * h)
}

/// Largest |y − offset| feature: (center, fwhm, amplitude).
fn peak_guess(points: &[(f64, f64)], resid: &[f64]) -> (f64, f64, f64) {
    let (j, _) = resid.iter().enumerate().fold(
        (0, -1.0),
        |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc },
    );
    let amp = resid[j];
    let half = 0.5 * amp.abs();
    let mut lo = j;
    while lo > 0 && resid[lo].abs() > half {
        lo -= 1;
    }
    let mut hi = j;
    while hi + 1 < resid.len() && resid[hi].abs() > half {
        hi += 1;
    }
    let span = points[points.len() - 1].0 - points[0].0;
    let mut fwhm = (points[hi].0 - points[lo].0).abs();
    if !(fwhm > 0.0) {
        fwhm = (span / points.len() as f64).abs().max(f64::MIN_POSITIVE);
    }
    (points[j].0, fwhm, amp)
}

/// Least-squares fit of `n_peaks` Lorentzians plus a constant offset.
///
/// Parameters: center_i, fwhm_i, amplitude_i (i = 1..n), offset.
pub fn fit_lorentzian(points: &[(f64, f64)], n_peaks: usize) -> Result<FitResult> {
    const MODEL: &str = "lorentzian";
    if !(1..=2).contains(&n_peaks) {
        return Err(Error::fit(MODEL, "n_peaks must be 1 or 2"));
    }
    check_points(MODEL, points, 3 * n_peaks + 1)?;
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let offset = median(&mut pts.iter().map(|p| p.1).collect::<Vec<_>>());
    let mut resid: Vec<f64> = pts.iter().map(|p| p.1 - offset).collect();
    let mut x0 = Vec::new();
    let mut bounds = Vec::new();
    for _ in 0..n_peaks {
        let (c, w, a) = peak_guess(&pts, &resid);
        for (r, p) in resid.iter_mut().zip(&pts) {
            *r -= lorentzian(p.0, c, w, a);
        }
        x0.extend([c, w, a]);
        bounds.extend([FREE, POSITIVE, FREE]);
    }
    x0.push(offset);
    bounds.push(FREE);

    let model = |q: &[f64], r: &mut [f64]| {
        for (i, p) in pts.iter().enumerate() {
            let mut y = q[3 * n_peaks];
            for k in 0..n_peaks {
                y += lorentzian(p.0, q[3 * k], q[3 * k + 1], q[3 * k + 2]);
            }
            r[i] = y - p.1;
        }
    };
    let res = lm::minimize(MODEL, model, &x0, pts.len(), &bounds, &LmOptions::default())?;
    let mut names = Vec::new();
    for k in 1..=n_peaks {
        names.extend([format!("center_{k}"), format!("fwhm_{k}"), format!("amplitude_{k}")]);
    }
    names.push("offset".into());
    let mut out = FitResult::from_lm(MODEL, &names, &res, pts.len());
    if n_peaks == 2 && out.params[0].value > out.params[3].value {
        // report peaks in ascending center order
        let (a, b) = out.params.split_at_mut(3);
        for k in 0..3 {
            std::mem::swap(&mut a[k].value, &mut b[k].value);
            std::mem::swap(&mut a[k].stderr, &mut b[k].stderr);
            std::mem::swap(&mut a[k].at_bound, &mut b[k].at_bound);
        }
    }
    Ok(out)
}

/// Unit-peak Lorentzian used by the cascade model.
fn unit_line(f: f64, center: f64, fwhm: f64) -> f64 {
    lorentzian(f, center, fwhm, 1.0)
}

/// A·L₁(f)·L₂(f) with unit-peak Lorentzians.
pub fn cascade_model(f: f64, amplitude: f64, c1: f64, w1: f64, c2: f64, w2: f64) -> f64 {
    amplitude * unit_line(f, c1, w1) * unit_line(f, c2, w2)
}

/// End-to-end efficiency of two transducers in series.
pub fn cascade_eta(f: f64, eta_o2m: impl Fn(f64) -> f64, eta_m2o: impl Fn(f64) -> f64, link_loss: f64) -> f64 {
    eta_o2m(f) * eta_m2o(f) * link_loss
}

/// Fit the product of two Lorentzians. Parameters: amplitude, center_1,
/// fwhm_1, center_2, fwhm_2 with center_1 ≤ center_2.
pub fn fit_cascade(points: &[(f64, f64)]) -> Result<FitResult> {
    const MODEL: &str = "cascade";
    check_points(MODEL, points, 7)?;
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let resid: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (c, w, a) = peak_guess(&pts, &resid);

    let model = |q: &[f64], r: &mut [f64]| {
        for (i, p) in pts.iter().enumerate() {
            r[i] = cascade_model(p.0, q[0], q[1], q[2], q[3], q[4]) - p.1;
        }
    };
    let bounds = [FREE, FREE, POSITIVE, FREE, POSITIVE];
    // the split of one observed line into two factors is ambiguous, so try
    // a few starts and keep the best
    let mut best: Option<LmResult> = None;
    for (shift, r1, r2) in [(0.25, 1.2, 1.8), (0.1, 1.5, 1.5), (0.5, 1.0, 2.5), (0.0, 1.3, 2.0)] {
        let x0 = [a, c - shift * w, r1 * w, c + shift * w, r2 * w];
        if let Ok(res) = lm::minimize(MODEL, model, &x0, pts.len(), &bounds, &LmOptions::default()) {
            if best.as_ref().is_none_or(|b| res.residual_norm < b.residual_norm) {
                best = Some(res);
            }
        }
    }
    let mut res = best.ok_or_else(|| Error::fit(MODEL, "no start point converged"))?;
    if res.x[1] > res.x[3] {
        res.x.swap(1, 3);
        res.x.swap(2, 4);
        res.at_bound.swap(1, 3);
        res.at_bound.swap(2, 4);
        let perm = [0, 3, 4, 1, 2];
        res.covariance = nalgebra::DMatrix::from_fn(5, 5, |i, j| res.covariance[(perm[i], perm[j])]);
    }
    let names: Vec<String> = ["amplitude", "center_1", "fwhm_1", "center_2", "fwhm_2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    Ok(FitResult::from_lm(MODEL, &names, &res, pts.len()))
}

/// Relative count rate 1 + V·cos(2πΔf·t + Δφ)·exp(−t²/(2τ²)).
pub fn interference_trace(
    delta_f: f64,
    delta_phi: f64,
    tau_corr: f64,
    visibility: f64,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::param("visibility", "must lie in [0, 1]"));
    }
    if !(tau_corr > 0.0) {
        return Err(Error::param("tau_corr", "must be > 0"));
    }
    Ok(t_grid
        .iter()
        .map(|&t| envelope_model(t, delta_f, delta_phi, tau_corr, visibility, 1.0))
        .collect())
}

fn envelope_model(t: f64, df: f64, phi: f64, tau: f64, v: f64, offset: f64) -> f64 {
    offset * (1.0 + v * (TAU * df * t + phi).cos() * (-t * t / (2.0 * tau * tau)).exp())
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Fit the interference model. Parameters: delta_f, delta_phi, tau,
/// visibility (bounded to [0, 1]), offset.
pub fn fit_envelope(points: &[(f64, f64)]) -> Result<FitResult> {
    const MODEL: &str = "envelope";
    check_points(MODEL, points, 8)?;
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let span = pts[n - 1].0 - pts[0].0;
    if !(span > 0.0) {
        return Err(Error::fit(MODEL, "insufficient span: all samples at one time"));
    }

    let offset = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    if offset == 0.0 {
        return Err(Error::fit(MODEL, "zero mean count rate"));
    }
    let z: Vec<f64> = pts.iter().map(|p| p.1 / offset - 1.0).collect();

    // periodogram over [1/span, n/(2·span)]
    let proj = |f: f64| -> Complex64 {
        pts.iter()
            .zip(&z)
            .map(|(p, &zi)| zi * Complex64::from_polar(1.0, -TAU * f * p.0))
            .sum()
    };
    let f_lo = 1.0 / span;
    let f_hi = (n as f64 / (2.0 * span)).max(2.0 * f_lo);
    let steps = (10.0 * n as f64).min(20_000.0) as usize;
    let mut f_best = f_lo;
    let mut p_best = -1.0;
    for s in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * s as f64 / steps as f64;
        let pw = proj(f).norm_sqr();
        if pw > p_best {
            p_best = pw;
            f_best = f;
        }
    }
    // golden-section polish on the periodogram peak
    let df = (f_hi - f_lo) / steps as f64;
    let (mut a, mut b) = (f_best - df, f_best + df);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if proj(c).norm_sqr() > proj(d).norm_sqr() {
            b = d;
        } else {
            a = c;
        }
    }
    let f0 = 0.5 * (a + b);
    if f0 * span < 1.0 {
        return Err(Error::fit(MODEL, "insufficient span: less than one oscillation"));
    }
    let phi0 = proj(f0).arg();

    // envelope width and visibility by linear least squares on a τ grid
    let mut best = (span, 0.0, f64::INFINITY);
    for s in 0..=200 {
        let tau = span * 10f64.powf(-1.5 + 2.5 * s as f64 / 200.0);
        let basis: Vec<f64> = pts
            .iter()
            .map(|p| (TAU * f0 * p.0 + phi0).cos() * (-p.0 * p.0 / (2.0 * tau * tau)).exp())
            .collect();
        let bb: f64 = basis.iter().map(|v| v * v).sum();
        if bb == 0.0 {
            continue;
        }
        let v = basis.iter().zip(&z).map(|(b, z)| b * z).sum::<f64>() / bb;
        let cost: f64 = basis.iter().zip(&z).map(|(b, z)| (z - v * b).powi(2)).sum();
        if cost < best.2 {
            best = (tau, v, cost);
        }
    }
    let x0 = [f0, phi0, best.0, best.1.clamp(0.0, 1.0), offset];
    let bounds = [FREE, FREE, POSITIVE, (0.0, 1.0), FREE];
    let model = |q: &[f64], r: &mut [f64]| {
        for (i, p) in pts.iter().enumerate() {
            r[i] = envelope_model(p.0, q[0], q[1], q[2], q[3], q[4]) - p.1;
        }
    };
    let mut res = lm::minimize(MODEL, model, &x0, n, &bounds, &LmOptions::default())?;
    res.x[1] = wrap_phase(res.x[1]);
    let t_max = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if t_max < 0.5 * res.x[2] {
        return Err(Error::fit(
            MODEL,
            "insufficient span: data cover less than half an envelope width",
        ));
    }
    let names: Vec<String> = ["delta_f", "delta_phi", "tau", "visibility", "offset"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    Ok(FitResult::from_lm(MODEL, &names, &res, n))
}

/// One microwave reflection measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReflectionDatum {
    Complex(Complex64),
    Magnitude(f64),
}

/// Parameters of the hybridized resonator-plus-spins reflection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionModel {
    pub g_e_tot: f64,
    pub kappa_ext: f64,
    pub kappa_int: f64,
    pub delta_ec: f64,
    pub gamma_e: f64,
    /// Population difference of the spin transition.
    pub population: f64,
}

impl ReflectionModel {
    pub fn from_params(p: &SystemParams) -> Self {
        Self {
            g_e_tot: p.g_e_tot,
            kappa_ext: p.kappa_e_ext,
            kappa_int: p.kappa_e_int,
            delta_ec: p.delta_ec,
            gamma_e: p.inhom_e,
            population: p.spin_population(),
        }
    }

    /// Reflection at probe detuning `omega` from the spin line (rad/s).
    pub fn reflection(&self, omega: f64) -> Complex64 {
        reflection_sq(
            self.g_e_tot * self.g_e_tot,
            self.kappa_ext,
            self.kappa_int,
            self.delta_ec,
            self.gamma_e,
            self.population,
            omega,
        )
    }
}

fn reflection_sq(g2: f64, kc: f64, ki: f64, delta_ec: f64, gamma: f64, n: f64, omega: f64) -> Complex64 {
    let i = Complex64::i();
    let c = g2 * n / (0.5 * gamma - i * omega);
    let delta = omega - delta_ec;
    let half = 0.5 * (kc + ki);
    (kc - half + i * delta - c) / (half - i * delta + c)
}

/// Fit the hybridized reflection for g_e_tot, kappa_e_ext, kappa_e_int,
/// delta_ec and Gamma_e (all rad/s), starting from `p0`. Frequencies are
/// probe detunings from the spin line in rad/s.
///
/// g is fitted through g² ≥ 0; its reported error is √(g² + σ_g²) − g,
/// which stays meaningful when g is consistent with zero. With magnitude
/// data the fit relies on the start point to pick the external/internal
/// assignment.
pub fn fit_reflection(points: &[(f64, ReflectionDatum)], p0: &SystemParams) -> Result<FitResult> {
    const MODEL: &str = "reflection";
    if points.len() < 10 {
        return Err(Error::fit(
            MODEL,
            format!("need at least 10 points, got {}", points.len()),
        ));
    }
    let start = ReflectionModel::from_params(p0);
    let k0 = (start.kappa_ext + start.kappa_int).max(f64::MIN_POSITIVE);
    let gam0 = start.gamma_e.max(f64::MIN_POSITIVE);
    let s0 = (start.g_e_tot * start.g_e_tot).max(0.25 * k0 * gam0);
    let n_res: usize = points
        .iter()
        .map(|(_, d)| match d {
            ReflectionDatum::Complex(_) => 2,
            ReflectionDatum::Magnitude(_) => 1,
        })
        .sum();
    let model = |q: &[f64], r: &mut [f64]| {
        let mut j = 0;
        for &(w, d) in points {
            let z = reflection_sq(
                q[0] * s0,
                q[1] * k0,
                q[2] * k0,
                q[3] * k0,
                q[4] * gam0,
                start.population,
                w,
            );
            match d {
                ReflectionDatum::Complex(y) => {
                    r[j] = z.re - y.re;
                    r[j + 1] = z.im - y.im;
                    j += 2;
                }
                ReflectionDatum::Magnitude(y) => {
                    r[j] = z.norm() - y;
                    j += 1;
                }
            }
        }
    };
    let x0 = [
        start.g_e_tot * start.g_e_tot / s0,
        start.kappa_ext / k0,
        start.kappa_int / k0,
        start.delta_ec / k0,
        start.gamma_e / gam0,
    ];
    let bounds = [(0.0, f64::INFINITY), POSITIVE, (0.0, f64::INFINITY), FREE, POSITIVE];
    let res = lm::minimize(MODEL, model, &x0, n_res, &bounds, &LmOptions::default())?;

    let s = res.x[0] * s0;
    let sigma_s = res.stderr(0) * s0;
    let g = s.sqrt();
    let params = vec![
        FitParam {
            name: "g_e_tot".into(),
            value: g,
            stderr: (s + sigma_s).sqrt() - g,
            at_bound: res.at_bound[0],
        },
        scaled("kappa_e_ext", &res, 1, k0),
        scaled("kappa_e_int", &res, 2, k0),
        scaled("delta_ec", &res, 3, k0),
        scaled("Gamma_e", &res, 4, gam0),
    ];
    Ok(FitResult {
        model: MODEL.into(),
        params,
        residual_norm: res.residual_norm,
        n_points: points.len(),
    })
}

fn scaled(name: &str, res: &LmResult, i: usize, scale: f64) -> FitParam {
    FitParam {
        name: name.into(),
        value: res.x[i] * scale,
        stderr: res.stderr(i) * scale,
        at_bound: res.at_bound[i],
    }
}
