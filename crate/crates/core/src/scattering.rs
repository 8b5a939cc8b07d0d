//! Exact linear input–output solver for k atom groups in two cavities.
//!
//! Mode vector (a, σ_o,1..k, σ_s,1..k, b); ports (a_ext, a_int, 2k unused
//! atom ports, b_ext, b_int). The probe detuning is folded into the diagonal
//! of the drift matrix, so S = Bᵀ(−A′)⁻¹B − I is evaluated at zero frequency
//! of the rotated frame.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Lu};
use crate::params::{check_populations, SystemParams};

const COND_WARN: f64 = 1e12;

/// A set of identical ions treated as one emitter.
///
/// `g_o`, `g_e` are single-ion couplings; the matrix carries them as
/// g·√weight so Σ weight·g² is the collective coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomGroup {
    pub delta_o: f64,
    pub delta_e: f64,
    pub g_o: f64,
    pub g_e: f64,
    pub rabi: f64,
    pub n_g: f64,
    pub n_e1: f64,
    pub n_e2: f64,
    pub weight: u32,
}

impl AtomGroup {
    /// The whole ensemble of `p` as one group at the carrier.
    pub fn collective(p: &SystemParams) -> Self {
        Self {
            delta_o: 0.0,
            delta_e: 0.0,
            g_o: p.g_o_tot,
            g_e: p.g_e_tot,
            rabi: p.rabi,
            n_g: p.n_g,
            n_e1: p.n_e1,
            n_e2: p.n_e2,
            weight: 1,
        }
    }

    /// `k` identical copies of the collective group, each with g/√k.
    pub fn split(p: &SystemParams, k: usize) -> Vec<Self> {
        let s = (k as f64).sqrt();
        let mut g = Self::collective(p);
        g.g_o /= s;
        g.g_e /= s;
        vec![g; k]
    }

    fn validate(&self, i: usize) -> Result<()> {
        if self.weight == 0 {
            return Err(Error::param(format!("groups[{i}].weight"), "must be >= 1"));
        }
        for (name, v) in [("g_o", self.g_o), ("g_e", self.g_e), ("Omega", self.rabi)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(format!("groups[{i}].{name}"), "must be finite and >= 0"));
            }
        }
        if !self.delta_o.is_finite() || !self.delta_e.is_finite() {
            return Err(Error::param(format!("groups[{i}].delta"), "must be finite"));
        }
        check_populations(self.n_g, self.n_e1, self.n_e2)
    }
}

/// Named positions in the mode vector and the port vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    pub k: usize,
}

impl IndexMap {
    pub fn n_modes(&self) -> usize {
        2 * self.k + 2
    }
    pub fn n_ports(&self) -> usize {
        2 * self.k + 4
    }
    pub fn optical_cavity(&self) -> usize {
        0
    }
    pub fn optical_coherence(&self, i: usize) -> usize {
        1 + i
    }
    pub fn spin_coherence(&self, i: usize) -> usize {
        1 + self.k + i
    }
    pub fn microwave_cavity(&self) -> usize {
        2 * self.k + 1
    }
    pub fn a_ext(&self) -> usize {
        0
    }
    pub fn a_int(&self) -> usize {
        1
    }
    pub fn b_ext(&self) -> usize {
        2 * self.k + 2
    }
    pub fn b_int(&self) -> usize {
        2 * self.k + 3
    }
    /// The ports with nonzero input coupling, in the order used by
    /// [`PortBlock`].
    pub fn cavity_ports(&self) -> [usize; 4] {
        [self.a_ext(), self.a_int(), self.b_ext(), self.b_int()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    /// Drift matrix with the probe detuning already on its diagonal.
    pub a: CMatrix,
    pub b: DMatrix<f64>,
    pub k: usize,
    pub index: IndexMap,
    pub probe_detuning: f64,
}

/// Build the drift and input matrices. Per-ion dephasing comes from
/// `p.gamma_o`, `p.gamma_s`; cavity rates and detunings from `p`.
pub fn build_system(groups: &[AtomGroup], p: &SystemParams, probe_detuning: f64) -> Result<LinearSystem> {
    if groups.is_empty() {
        return Err(Error::param("groups", "need at least one atom group"));
    }
    for (name, v) in [
        ("kappa_o_ext", p.kappa_o_ext),
        ("kappa_o_int", p.kappa_o_int),
        ("kappa_e_ext", p.kappa_e_ext),
        ("kappa_e_int", p.kappa_e_int),
        ("gamma_o", p.gamma_o),
        ("gamma_s", p.gamma_s),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::param(name, "rates must be finite and >= 0"));
        }
    }
    if !probe_detuning.is_finite() {
        return Err(Error::param("probe_detuning", "must be finite"));
    }
    for (i, g) in groups.iter().enumerate() {
        g.validate(i)?;
    }

    let k = groups.len();
    let ix = IndexMap { k };
    let n = ix.n_modes();
    let i = Complex64::i();
    let mut a = CMatrix::zeros(n, n);
    let (ca, cb) = (ix.optical_cavity(), ix.microwave_cavity());

    a[(ca, ca)] = -i * p.delta_oc - 0.5 * p.kappa_o();
    a[(cb, cb)] = -i * p.delta_ec - 0.5 * p.kappa_e();
    for (j, g) in groups.iter().enumerate() {
        let (so, ss) = (ix.optical_coherence(j), ix.spin_coherence(j));
        let w = f64::from(g.weight).sqrt();
        let (g_o, g_e) = (g.g_o * w, g.g_e * w);
        let n_o = g.n_g - g.n_e2;
        let n_e = g.n_e1 - g.n_e2;
        a[(ca, so)] = -i * g_o;
        a[(so, ca)] = -i * g_o * n_o;
        a[(so, so)] = -i * g.delta_o - 0.5 * p.gamma_o;
        a[(so, ss)] = i * g.rabi;
        a[(ss, so)] = i * g.rabi;
        a[(ss, ss)] = -i * g.delta_e - 0.5 * p.gamma_s;
        a[(ss, cb)] = -i * g_e * n_e;
        a[(cb, ss)] = -i * g_e;
    }
    for d in 0..n {
        a[(d, d)] += i * probe_detuning;
    }

    let mut b = DMatrix::zeros(n, ix.n_ports());
    b[(ca, ix.a_ext())] = p.kappa_o_ext.sqrt();
    b[(ca, ix.a_int())] = p.kappa_o_int.sqrt();
    b[(cb, ix.b_ext())] = p.kappa_e_ext.sqrt();
    b[(cb, ix.b_int())] = p.kappa_e_int.sqrt();

    Ok(LinearSystem {
        a,
        b,
        k,
        index: ix,
        probe_detuning,
    })
}

/// Scattering amplitudes among the four cavity ports, ordered
/// (a_ext, a_int, b_ext, b_int); `s[out][in]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortBlock {
    pub s: [[Complex64; 4]; 4],
}

const AE: usize = 0;
const BE: usize = 2;
const BI: usize = 3;

impl PortBlock {
    pub fn eta_m2o(&self) -> f64 {
        self.s[AE][BE].norm_sqr()
    }
    pub fn eta_o2m(&self) -> f64 {
        self.s[BE][AE].norm_sqr()
    }
    pub fn refl_mw(&self) -> f64 {
        self.s[BE][BE].norm_sqr()
    }
    pub fn refl_opt(&self) -> f64 {
        self.s[AE][AE].norm_sqr()
    }
    /// Microwave reflection amplitude.
    pub fn mw_reflection(&self) -> Complex64 {
        self.s[BE][BE]
    }
    /// |S(a_ext ← b_int)|²/|S(a_ext ← b_ext)|²; NaN when no conversion.
    pub fn noise_ratio(&self) -> f64 {
        let eta = self.eta_m2o();
        if eta == 0.0 {
            f64::NAN
        } else {
            self.s[AE][BI].norm_sqr() / eta
        }
    }
}

/// Factorize −A′ and solve only the four nonzero input columns.
pub fn solve_ports(sys: &LinearSystem) -> Result<PortBlock> {
    let ix = sys.index;
    let n = ix.n_modes();
    let singular = || Error::Singular {
        probe_detuning: sys.probe_detuning,
    };
    let m = -sys.a.clone();
    let lu = Lu::new(m).ok_or_else(singular)?;

    let ports = ix.cavity_ports();
    let rhs = CMatrix::from_fn(n, 4, |r, c| Complex64::new(sys.b[(r, ports[c])], 0.0));
    let x = lu.solve(&rhs).ok_or_else(singular)?;

    let cond = lu.condition_estimate();
    if cond > COND_WARN {
        log::warn!(
            "ill-conditioned input-output system (cond ~ {cond:.3e}) at probe detuning {} rad/s",
            sys.probe_detuning
        );
    }

    let mut s = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (o, &po) in ports.iter().enumerate() {
        for inp in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in [ix.optical_cavity(), ix.microwave_cavity()] {
                acc += sys.b[(r, po)] * x[(r, inp)];
            }
            if o == inp {
                acc -= 1.0;
            }
            s[o][inp] = acc;
        }
    }
    Ok(PortBlock { s })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringResult {
    /// Full (2k+4)×(2k+4) scattering matrix, `s[(out, in)]`.
    pub s: CMatrix,
    pub index: IndexMap,
    pub probe_detuning: f64,
    pub ports: PortBlock,
    pub eta_m2o: f64,
    pub eta_o2m: f64,
    pub refl_mw: f64,
    pub refl_opt: f64,
    pub noise_ratio: f64,
}

/// Solve the system and assemble the full scattering matrix. Atom ports
/// carry no input coupling and so reflect with S = −1.
pub fn solve_scattering(sys: &LinearSystem) -> Result<ScatteringResult> {
    let ports = solve_ports(sys)?;
    let ix = sys.index;
    let np = ix.n_ports();
    let mut s = CMatrix::zeros(np, np);
    for d in 0..np {
        s[(d, d)] = Complex64::new(-1.0, 0.0);
    }
    let idx = ix.cavity_ports();
    for o in 0..4 {
        for i in 0..4 {
            s[(idx[o], idx[i])] = ports.s[o][i];
        }
    }
    Ok(ScatteringResult {
        s,
        index: ix,
        probe_detuning: sys.probe_detuning,
        eta_m2o: ports.eta_m2o(),
        eta_o2m: ports.eta_o2m(),
        refl_mw: ports.refl_mw(),
        refl_opt: ports.refl_opt(),
        noise_ratio: ports.noise_ratio(),
        ports,
    })
}

/// Build and solve in one step, returning only the cavity-port block.
pub fn respond(groups: &[AtomGroup], p: &SystemParams, probe_detuning: f64) -> Result<PortBlock> {
    solve_ports(&build_system(groups, p, probe_detuning)?)
}

/// Added noise referred to the input: N_wg + (κ_e,int/κ_e,ext)·N_res,int,
/// with the ratio taken from the solved S-matrix.
///
/// Fails when nothing is converted, or when the solved ratio departs from
/// κ_e,int/κ_e,ext by more than 10⁻⁸ relative.
pub fn added_noise_rti(r: &ScatteringResult, p: &SystemParams, n_wg: f64, n_res_int: f64) -> Result<f64> {
    if !(r.eta_m2o > 0.0) {
        return Err(Error::Domain(
            "eta_m2o = 0: added noise referred to the input is undefined".into(),
        ));
    }
    let expected = p.kappa_e_int / p.kappa_e_ext;
    if (r.noise_ratio - expected).abs() > 1e-8 * expected {
        return Err(Error::Domain(format!(
            "noise transfer ratio {} disagrees with kappa_e_int/kappa_e_ext = {expected}",
            r.noise_ratio
        )));
    }
    Ok(n_wg + r.noise_ratio * n_res_int)
}

/// Complex microwave reflection at each probe detuning from the full solver.
pub fn mw_reflection_spectrum(
    groups: &[AtomGroup],
    p: &SystemParams,
    detuning_grid: &[f64],
) -> Result<Vec<(f64, Complex64)>> {
    if detuning_grid.is_empty() {
        return Err(Error::param("detuning_grid", "must be nonempty"));
    }
    detuning_grid
        .iter()
        .map(|&d| Ok((d, respond(groups, p, d)?.mw_reflection())))
        .collect()
}

/// Closed-form microwave reflection when only the spin–microwave coupling
/// is active: (κ_c − κ/2 + iΔ − C)/(κ/2 − iΔ + C), with Δ = probe − δ_ec and
/// C = Σ w g_e²(n_e1 − n_e2)/(γ_s/2 − iΔ_at), Δ_at = probe − δ_e.
pub fn mw_reflection_closed_form(groups: &[AtomGroup], p: &SystemParams, probe: f64) -> Complex64 {
    let i = Complex64::i();
    let big_delta = probe - p.delta_ec;
    let c: Complex64 = groups
        .iter()
        .map(|g| {
            let w = f64::from(g.weight);
            w * g.g_e * g.g_e * (g.n_e1 - g.n_e2) / (0.5 * p.gamma_s - i * (probe - g.delta_e))
        })
        .sum();
    let half = 0.5 * p.kappa_e();
    (p.kappa_e_ext - half + i * big_delta - c) / (half - i * big_delta + c)
}
