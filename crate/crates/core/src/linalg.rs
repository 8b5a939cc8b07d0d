//! Dense complex LU with a cheap 1-norm condition estimate.

use nalgebra::{DMatrix, Dyn, LU};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// LU factors of a square complex matrix.
pub struct Lu {
    lu: LU<Complex64, Dyn, Dyn>,
    norm1: f64,
    n: usize,
}

fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Lu {
    /// Factorize `a`. Returns `None` when a pivot is exactly zero.
    pub fn new(a: CMatrix) -> Option<Self> {
        assert!(a.is_square());
        let n = a.nrows();
        let norm1 = norm1(&a);
        let lu = a.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self { lu, norm1, n })
    }

    /// Solve `A X = B`. `None` if the result is not finite.
    pub fn solve(&self, b: &CMatrix) -> Option<CMatrix> {
        let x = self.lu.solve(b)?;
        x.iter().all(|z| z.is_finite()).then_some(x)
    }

    /// Solve `Aᴴ X = B` with the same factors.
    pub fn solve_adjoint(&self, b: &CMatrix) -> Option<CMatrix> {
        // P A = L U  =>  Aᴴ = Uᴴ Lᴴ P
        let z = self.lu.u().adjoint().solve_lower_triangular(b)?;
        let mut w = self.lu.l().adjoint().solve_upper_triangular(&z)?;
        self.lu.p().inv_permute_rows(&mut w);
        w.iter().all(|z| z.is_finite()).then_some(w)
    }

    /// Estimate of the 1-norm condition number ‖A‖₁‖A⁻¹‖₁ (Hager/Higham).
    ///
    /// A lower bound that is almost always within a small factor of the truth.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = CMatrix::from_element(n, 1, Complex64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let Some(y) = self.solve(&x) else {
                return f64::INFINITY;
            };
            est = y.iter().map(|z| z.norm()).sum::<f64>();
            let xi = y.map(|z| {
                let r = z.norm();
                if r == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    z / r
                }
            });
            let Some(z) = self.solve_adjoint(&xi) else {
                return f64::INFINITY;
            };
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x.fill(Complex64::new(0.0, 0.0));
            x[j] = Complex64::new(1.0, 0.0);
        }
        // Higham's alternating-sign test vector guards against the rare
        // underestimate of the power iteration above.
        let alt = CMatrix::from_fn(n, 1, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        });
        if let Some(y) = self.solve(&alt) {
            let alt_est = 2.0 * y.iter().map(|z| z.norm()).sum::<f64>() / (3.0 * n as f64);
            est = est.max(alt_est);
        }
        est * self.norm1
    }
}
