//! Shared random draws for integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transducer::params::{hz, SystemParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-uniform in [lo, hi].
pub fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + r.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

/// A physical parameter set with per-ion linewidths equal to the ensemble
/// ones, so one group is exactly the single-atom model. Couplings are drawn
/// through cooperativities C_e, C_o, C_a log-uniform in [10⁻³, 10³].
pub fn random_params(r: &mut impl Rng) -> SystemParams {
    let ke = log_uniform(r, 1e5, 1e8);
    let qe = uniform(r, 0.05, 0.95);
    let ko = log_uniform(r, 1e6, 1e11);
    let qo = uniform(r, 0.05, 0.95);
    let gam_e = log_uniform(r, 1e4, 1e7);
    let gam_o = log_uniform(r, 1e6, 1e9);
    let (c_e, c_o, c_a) = (
        log_uniform(r, 1e-3, 1e3),
        log_uniform(r, 1e-3, 1e3),
        log_uniform(r, 1e-3, 1e3),
    );
    let n_g = uniform(r, 0.05, 0.5);
    SystemParams {
        kappa_e_ext: ke * qe,
        kappa_e_int: ke * (1.0 - qe),
        kappa_o_ext: ko * qo,
        kappa_o_int: ko * (1.0 - qo),
        gamma_o: gam_o,
        gamma_s: gam_e,
        inhom_o: gam_o,
        inhom_e: gam_e,
        omega_e: hz(3.37e9),
        omega_o: hz(3.045e14),
        g_o_tot: (c_o * ko * gam_o / 4.0).sqrt(),
        g_e_tot: (c_e * ke * gam_e / 4.0).sqrt(),
        rabi: (c_a * gam_o * gam_e / 4.0).sqrt(),
        delta_oc: uniform(r, -1.0, 1.0) * ko,
        delta_ec: uniform(r, -1.0, 1.0) * ke,
        n_g,
        n_e1: n_g,
        n_e2: uniform(r, 0.0, 0.9) * n_g.min(1.0 - 2.0 * n_g),
        manifold_fraction: 1.0,
    }
}
