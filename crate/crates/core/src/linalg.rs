//! Small dense solves backed by nalgebra's partially pivoted LU.

use nalgebra::Dyn;
use nalgebra::{DMatrix, DVector, LU};

pub(crate) fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) struct Factorization {
    lu: LU<f64, Dyn, Dyn>,
    a: DMatrix<f64>,
}

impl Factorization {
    /// Factors `a`, rejecting it as singular when a pivot falls below
    /// `rel_pivot_tol * ||a||_inf`.
    pub(crate) fn new(a: DMatrix<f64>, rel_pivot_tol: f64) -> Option<Self> {
        let scale = norm_inf(&a);
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        let lu = a.clone().lu();
        let min_pivot = lu.u().diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        if min_pivot.is_nan() || min_pivot <= rel_pivot_tol * scale {
            return None;
        }
        Some(Self { lu, a })
    }

    /// Solve with one step of iterative refinement.
    pub(crate) fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.lu.solve(b)?;
        let r = b - &self.a * &x;
        if let Some(dx) = self.lu.solve(&r) {
            x += dx;
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}
