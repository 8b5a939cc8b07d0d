//! Bounded Levenberg–Marquardt with forward-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the relative cost reduction of an accepted step falls below.
    pub ftol: f64,
    /// Stop when every relative parameter change falls below.
    pub xtol: f64,
    /// Stop when the scaled gradient falls below.
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            ftol: 1e-15,
            xtol: 1e-13,
            gtol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// s²·(JᵀJ)⁺ at the solution, s² = Σr²/(m − n).
    pub covariance: DMatrix<f64>,
    /// √Σr².
    pub residual_norm: f64,
    pub iterations: usize,
    /// Parameters sitting on a bound at the solution.
    pub at_bound: Vec<bool>,
}

impl LmResult {
    pub fn stderr(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn jacobian<F>(f: &F, x: &[f64], r0: &DVector<f64>, bounds: &[(f64, f64)], model: &str) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let m = r0.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; m];
    for j in 0..n {
        let mut h = f64::EPSILON.sqrt() * if x[j] != 0.0 { x[j].abs() } else { 1e-8 };
        if x[j] + h > bounds[j].1 {
            h = -h;
        }
        xp[j] = x[j] + h;
        let h = xp[j] - x[j];
        f(&xp, &mut rp);
        if rp.iter().any(|v| !v.is_finite()) {
            return Err(Error::fit(model, "non-finite residual while differentiating"));
        }
        for i in 0..m {
            jac[(i, j)] = (rp[i] - r0[i]) / h;
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

/// Minimize Σ rᵢ(x)² within box bounds. `f` writes the `m` residuals.
pub fn minimize<F>(model: &str, f: F, x0: &[f64], m: usize, bounds: &[(f64, f64)], opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = x0.len();
    assert_eq!(bounds.len(), n);
    if m < n {
        return Err(Error::fit(
            model,
            format!("{m} residuals cannot determine {n} parameters"),
        ));
    }
    let eval = |x: &[f64]| -> Result<DVector<f64>> {
        let mut r = vec![0.0; m];
        f(x, &mut r);
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::fit(model, "non-finite residual"));
        }
        Ok(DVector::from_vec(r))
    };

    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let mut r = eval(&x)?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut diag = DVector::<f64>::zeros(n);
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let jac = jacobian(&f, &x, &r, bounds, model)?;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        for j in 0..n {
            diag[j] = diag[j].max(jtj[(j, j)]).max(1e-300);
        }
        // parameters held on a bound by the gradient are frozen this round
        let active: Vec<bool> = (0..n)
            .map(|j| (x[j] <= bounds[j].0 && g[j] > 0.0) || (x[j] >= bounds[j].1 && g[j] < 0.0))
            .collect();
        let gnorm = (0..n)
            .filter(|&j| !active[j])
            .map(|j| g[j].abs() / (diag[j].sqrt() * cost.sqrt().max(1e-300)))
            .fold(0.0, f64::max);
        if gnorm < opts.gtol {
            converged = true;
            break;
        }

        // inner loop: raise λ until a step lowers the cost
        loop {
            let mut lhs = jtj.clone();
            let mut rhs = -&g;
            for j in 0..n {
                lhs[(j, j)] += lambda * diag[j];
            }
            for j in (0..n).filter(|&j| active[j]) {
                lhs.row_mut(j).fill(0.0);
                lhs.column_mut(j).fill(0.0);
                lhs[(j, j)] = 1.0;
                rhs[j] = 0.0;
            }
            let step = lhs.lu().solve(&rhs);
            let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    converged = true;
                    break;
                }
                continue;
            };
            let mut xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut xn, bounds);
            let rn = match eval(&xn) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    if lambda > 1e20 {
                        converged = true;
                        break;
                    }
                    continue;
                }
            };
            let cn = rn.norm_squared();
            if cn < cost {
                let small_step = x
                    .iter()
                    .zip(&xn)
                    .all(|(a, b)| (a - b).abs() <= opts.xtol * (a.abs() + opts.xtol));
                let small_gain = (cost - cn) <= opts.ftol * cost;
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                converged = small_step || small_gain || cost == 0.0;
                break;
            }
            lambda *= 2.0;
            if lambda > 1e20 {
                // no descent direction left at this resolution
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::fit(
            model,
            format!("no convergence after {iterations} iterations"),
        ));
    }

    let jac = jacobian(&f, &x, &r, bounds, model)?;
    let jtj = jac.transpose() * &jac;
    let dof = (m - n).max(1) as f64;
    let s2 = cost / dof;
    let eps = 1e-14 * jtj.amax().max(1e-300);
    let pinv = jtj.pseudo_inverse(eps).map_err(|e| Error::fit(model, e.to_string()))?;
    let at_bound = x
        .iter()
        .zip(bounds)
        .map(|(v, &(lo, hi))| *v <= lo || *v >= hi)
        .collect();
    Ok(LmResult {
        x,
        covariance: pinv * s2,
        residual_norm: cost.sqrt(),
        iterations,
        at_bound,
    })
}
