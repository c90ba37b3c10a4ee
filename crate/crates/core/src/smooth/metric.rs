use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{check_dim, invalid, Result};
use crate::expr::{Expr, Tape};
use crate::smooth::field::{SmoothScalarField, SmoothVectorField};

/// A Riemannian metric `g(x)` on `ℝᵐ` with an explicit inverse.
#[derive(Clone)]
pub struct RiemannianMetric {
    dim: usize,
    g: Vec<Vec<Expr>>,
    g_inv: Vec<Vec<Expr>>,
    tapes: Arc<(OnceLock<Tape>, OnceLock<Tape>)>,
}

impl RiemannianMetric {
    pub fn euclidean(dim: usize) -> Self {
        let id: Vec<Vec<Expr>> = (0..dim)
            .map(|i| (0..dim).map(|j| Expr::constant(if i == j { 1.0 } else { 0.0 })).collect())
            .collect();
        Self::build(dim, id.clone(), id)
    }

    /// Constant SPD metric; the inverse is computed once.
    pub fn constant(g: &[Vec<f64>]) -> Result<Self> {
        let m = g.len();
        if g.iter().any(|r| r.len() != m) {
            return Err(invalid("metric must be square"));
        }
        let mat = DMatrix::from_fn(m, m, |i, j| g[i][j]);
        if (&mat - mat.transpose()).abs().max() > 1e-12 {
            return Err(invalid("metric must be symmetric"));
        }
        let chol = mat
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("metric must be positive definite"))?;
        let inv = chol.inverse();
        let to_exprs = |a: &DMatrix<f64>| -> Vec<Vec<Expr>> {
            (0..m).map(|i| (0..m).map(|j| Expr::constant(a[(i, j)])).collect()).collect()
        };
        Ok(Self::build(m, to_exprs(&mat), to_exprs(&inv)))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let g: Vec<Vec<f64>> = (0..d.len())
            .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
            .collect();
        Self::constant(&g)
    }

    /// Conformal metric `g = e^{2f} I`.
    pub fn conformal(f: &SmoothScalarField) -> Self {
        let m = f.dim();
        let up = (f.expr() * 2.0).exp();
        let down = (f.expr() * -2.0).exp();
        let diag = |e: &Expr| -> Vec<Vec<Expr>> {
            (0..m)
                .map(|i| (0..m).map(|j| if i == j { e.clone() } else { Expr::zero() }).collect())
                .collect()
        };
        Self::build(m, diag(&up), diag(&down))
    }

    fn build(dim: usize, g: Vec<Vec<Expr>>, g_inv: Vec<Vec<Expr>>) -> Self {
        RiemannianMetric { dim, g, g_inv, tapes: Arc::new((OnceLock::new(), OnceLock::new())) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entries of `g⁻¹` as expressions.
    pub fn inverse_exprs(&self) -> &[Vec<Expr>] {
        &self.g_inv
    }

    fn eval_matrix(m: &[Vec<Expr>], tape: &OnceLock<Tape>, x: &[f64]) -> Vec<Vec<f64>> {
        let tape = tape.get_or_init(|| {
            let flat: Vec<Expr> = m.iter().flatten().cloned().collect();
            Tape::compile(&flat)
        });
        tape.eval(x).chunks(m.len()).map(|r| r.to_vec()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<Vec<f64>> {
        Self::eval_matrix(&self.g, &self.tapes.0, x)
    }

    pub fn inverse(&self, x: &[f64]) -> Vec<Vec<f64>> {
        Self::eval_matrix(&self.g_inv, &self.tapes.1, x)
    }

    /// `⟨u, w⟩_{g(x)}`.
    pub fn inner(&self, x: &[f64], u: &[f64], w: &[f64]) -> f64 {
        let g = self.eval(x);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| u[i] * g[i][j] * w[j]).sum::<f64>())
            .sum()
    }

    /// Symmetry, positivity and inverse consistency at `x`; returns the worst
    /// violation found (0 for a valid metric).
    pub fn check_at(&self, x: &[f64]) -> f64 {
        let m = self.dim;
        let (gx, gix) = (self.eval(x), self.inverse(x));
        let g = DMatrix::from_fn(m, m, |i, j| gx[i][j]);
        let gi = DMatrix::from_fn(m, m, |i, j| gix[i][j]);
        let sym = (&g - g.transpose()).abs().max();
        let inv = (&g * &gi - DMatrix::identity(m, m)).abs().max();
        let min_eig = g.clone().symmetric_eigen().eigenvalues.min();
        let pos = if min_eig > 0.0 { 0.0 } else { 1.0 - min_eig };
        sym.max(inv).max(pos)
    }
}

/// `∇_gφ = g⁻¹ ∇φ`, inheriting φ's support.
pub fn metric_gradient(phi: &SmoothScalarField, g: &RiemannianMetric) -> Result<SmoothVectorField> {
    check_dim("metric gradient", g.dim(), phi.dim())?;
    let grad = phi.grad_exprs();
    let comps = g.g_inv.iter().map(|row| Expr::dot(row, grad)).collect();
    Ok(SmoothVectorField::from_exprs(comps, phi.support().cloned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::field::{directional_derivative_scalar, make_bump};

    #[test]
    fn euclidean_gradient_is_ordinary() {
        let phi = make_bump(&[0.2, 0.1], 1.5).unwrap();
        let g = RiemannianMetric::euclidean(2);
        let x = [0.5, -0.3];
        let u = metric_gradient(&phi, &g).unwrap().eval(&x);
        let d = phi.grad(&x);
        assert!((u[0] - d[0]).abs() < 1e-15 && (u[1] - d[1]).abs() < 1e-15);
    }

    #[test]
    fn diagonal_metric_gradient() {
        let g = RiemannianMetric::diagonal(&[4.0, 1.0]).unwrap();
        let x1 = SmoothScalarField::coordinate(2, 0);
        let u = metric_gradient(&x1, &g).unwrap().eval(&[3.0, 7.0]);
        assert!((u[0] - 0.25).abs() < 1e-15 && u[1].abs() < 1e-15);
    }

    #[test]
    fn gradient_defining_identity() {
        let f = SmoothScalarField::from_expr(2, Expr::var(0) * 0.3 + Expr::var(1).sin() * 0.2);
        let g = RiemannianMetric::conformal(&f);
        let phi = make_bump(&[0.0, 0.0], 2.0).unwrap();
        let grad = metric_gradient(&phi, &g).unwrap();
        let u = SmoothVectorField::constant(&[0.7, -1.3]);
        let x = [0.4, 0.9];
        let lhs = g.inner(&x, &grad.eval(&x), &u.eval(&x));
        let rhs = directional_derivative_scalar(&u, &phi).unwrap().eval(&x);
        assert!((lhs - rhs).abs() < 1e-10);
        assert!(g.check_at(&x) < 1e-10);
    }

    #[test]
    fn rejects_non_spd() {
        assert!(RiemannianMetric::constant(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(RiemannianMetric::constant(&[vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
    }
}
