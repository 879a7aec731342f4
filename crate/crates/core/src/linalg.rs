//! The weighted ridge solve behind every `u`-update.
//!
//! For a batch `(X, y)` and weights `v`, with `D = diag(v)`,
//!
//! ```text
//! u = argmin (1/n) ||y − (1/√d) X (u ⊙ v)||² + (λ/d) ||u||²
//!   ⇔ ((1/n) D Xᵀ X D + λ I_d) u = (√d/n) D Xᵀ y
//! ```
//!
//! When `n < d` the `n × n` dual system
//! `((1/n) X D² Xᵀ + λ I_n) w = (√d/n) y`, `u = D Xᵀ w` is solved instead.
//! Both systems are SPD for `λ > 0` and are factored with Cholesky.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One independent batch `y = (1/√d) X θ* + ε`.
#[derive(Debug, Clone)]
pub struct Batch {
    /// `n × d` design with i.i.d. standard normal entries.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// The noise realization, kept for diagnostics.
    pub epsilon: DVector<f64>,
}

impl Batch {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }
}

fn check_inputs(batch: &Batch, v: &[f64], lambda: f64) -> Result<()> {
    if v.len() != batch.d() {
        return Err(Error::LengthMismatch {
            expected: batch.d(),
            actual: v.len(),
        });
    }
    if batch.y.len() != batch.n() {
        return Err(Error::LengthMismatch {
            expected: batch.n(),
            actual: batch.y.len(),
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::NonFinite { what: "lambda" });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "weights" });
    }
    if batch.y.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "response" });
    }
    if batch.x.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "design" });
    }
    Ok(())
}

/// `X D`: the design with column `j` scaled by `v_j`.
fn scaled_design(x: &DMatrix<f64>, v: &[f64]) -> DMatrix<f64> {
    let mut b = x.clone();
    for (mut col, &vj) in b.column_iter_mut().zip(v) {
        col *= vj;
    }
    b
}

/// Minimizer of the weighted ridge objective. Uses the dual route when `n < d`.
pub fn weighted_ridge_solve(batch: &Batch, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if batch.n() < batch.d() {
        solve_dual(batch, v, lambda)
    } else {
        solve_primal(batch, v, lambda)
    }
}

/// Solve the `d × d` normal equations directly.
pub fn solve_primal(batch: &Batch, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_inputs(batch, v, lambda)?;
    let (n, d) = (batch.n() as f64, batch.d());
    let xd = scaled_design(&batch.x, v);
    let mut gram = xd.tr_mul(&xd);
    gram /= n;
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let rhs = xd.tr_mul(&batch.y) * ((d as f64).sqrt() / n);
    let chol = gram.cholesky().ok_or(Error::Factorization {
        system: "primal",
        dim: d,
    })?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Solve through the `n × n` push-through system.
pub fn solve_dual(batch: &Batch, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_inputs(batch, v, lambda)?;
    let (n, d) = (batch.n(), batch.d());
    let xd = scaled_design(&batch.x, v);
    let mut kernel = &xd * xd.transpose();
    kernel /= n as f64;
    for i in 0..n {
        kernel[(i, i)] += lambda;
    }
    let rhs = &batch.y * ((d as f64).sqrt() / n as f64);
    let chol = kernel.cholesky().ok_or(Error::Factorization {
        system: "dual",
        dim: n,
    })?;
    let w = chol.solve(&rhs);
    Ok(xd.tr_mul(&w).iter().copied().collect())
}

/// Scaled residual of the stationarity condition at `u`:
/// `||((1/n) D XᵀX D + λI) u − (√d/n) D Xᵀ y|| / max(1, ||(√d/n) D Xᵀ y||)`.
pub fn kkt_residual(batch: &Batch, v: &[f64], lambda: f64, u: &[f64]) -> f64 {
    let (n, d) = (batch.n() as f64, batch.d());
    let uv = DVector::from_iterator(d, u.iter().zip(v).map(|(a, b)| a * b));
    let fitted = &batch.x * uv;
    let back = batch.x.tr_mul(&fitted);
    let xty = batch.x.tr_mul(&batch.y);
    let scale = (d as f64).sqrt() / n;
    let mut resid2 = 0.0;
    let mut rhs2 = 0.0;
    for j in 0..d {
        let rhs = scale * v[j] * xty[j];
        let lhs = v[j] * back[j] / n + lambda * u[j];
        resid2 += (lhs - rhs) * (lhs - rhs);
        rhs2 += rhs * rhs;
    }
    resid2.sqrt() / rhs2.sqrt().max(1.0)
}
