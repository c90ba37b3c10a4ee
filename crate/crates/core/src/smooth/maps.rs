use nalgebra::DMatrix;

use crate::error::{check_dim, invalid, LiftedError, Result};
use crate::expr::Expr;
use crate::smooth::field::{Ball, SmoothScalarField, SmoothVectorField};
use crate::smooth::flow::flow;
use crate::smooth::form::FormOnX;

/// A diffeomorphism of `ℝᵐ` acting on points.
#[derive(Clone, Debug)]
pub enum Diffeo {
    /// Time-`t` map of a complete field.
    Flow { field: SmoothVectorField, t: f64 },
    /// `x ↦ A x + b` with invertible `A` (row-major).
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
}

impl Diffeo {
    pub fn translation(c: &[f64]) -> Self {
        let m = c.len();
        let a = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Diffeo::Affine { a, b: c.to_vec() }
    }

    pub fn identity(m: usize) -> Self {
        Self::translation(&vec![0.0; m])
    }

    pub fn affine(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let m = b.len();
        if a.len() != m || a.iter().any(|r| r.len() != m) {
            return Err(invalid("affine diffeo: matrix must be m x m"));
        }
        let det = DMatrix::from_fn(m, m, |i, j| a[i][j]).determinant();
        if det.abs() < 1e-14 {
            return Err(invalid("affine diffeo: singular matrix"));
        }
        Ok(Diffeo::Affine { a, b })
    }

    pub fn dim(&self) -> usize {
        match self {
            Diffeo::Flow { field, .. } => field.dim(),
            Diffeo::Affine { b, .. } => b.len(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("diffeo argument", self.dim(), x.len())?;
        match self {
            Diffeo::Flow { field, t } => flow(field, *t, x),
            Diffeo::Affine { a, b } => Ok(a
                .iter()
                .zip(b)
                .map(|(row, bi)| row.iter().zip(x).map(|(r, xi)| r * xi).sum::<f64>() + bi)
                .collect()),
        }
    }

    pub fn inverse(&self) -> Result<Diffeo> {
        match self {
            Diffeo::Flow { field, t } => Ok(Diffeo::Flow { field: field.clone(), t: -t }),
            Diffeo::Affine { a, b } => {
                let m = b.len();
                let inv = DMatrix::from_fn(m, m, |i, j| a[i][j])
                    .try_inverse()
                    .ok_or_else(|| invalid("affine diffeo: singular matrix"))?;
                let ai: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| inv[(i, j)]).collect()).collect();
                let bi = (0..m).map(|i| -(0..m).map(|j| ai[i][j] * b[j]).sum::<f64>()).collect();
                Ok(Diffeo::Affine { a: ai, b: bi })
            }
        }
    }
}

/// Proper affine isometric embedding `Υ(x') = A x' + b` of `ℝ^{m'}` into `ℝᵐ`.
///
/// Vector fields `v'` extend to `v(x) = χ(x) · A v'(Aᵀ(x − b))`, where `χ` is a
/// bump in the normal directions equal to 1 on the image; then `v ∘ Υ = A v'`.
#[derive(Clone, Debug)]
pub struct AffineEmbedding {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    normal_radius: Option<f64>,
}

impl AffineEmbedding {
    /// `a` is `m × m'` with orthonormal columns.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, normal_radius: Option<f64>) -> Result<Self> {
        let m = b.len();
        if a.len() != m {
            return Err(invalid("embedding matrix rows must match target dimension"));
        }
        let k = a.first().map_or(0, |r| r.len());
        if k > m || a.iter().any(|r| r.len() != k) {
            return Err(invalid("embedding matrix must be m x m' with m' <= m"));
        }
        for i in 0..k {
            for j in 0..k {
                let dot: f64 = (0..m).map(|r| a[r][i] * a[r][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-12 {
                    return Err(invalid("embedding columns must be orthonormal"));
                }
            }
        }
        if let Some(r) = normal_radius {
            if !(r > 0.0) {
                return Err(invalid("normal radius must be positive"));
            }
        }
        Ok(AffineEmbedding { a, b, normal_radius })
    }

    /// Inclusion of the first `m'` coordinate axes.
    pub fn coordinate_inclusion(m_src: usize, m: usize) -> Result<Self> {
        let a = (0..m).map(|i| (0..m_src).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(a, vec![0.0; m], Some(1.0))
    }

    pub fn source_dim(&self) -> usize {
        self.a.first().map_or(0, |r| r.len())
    }

    pub fn target_dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn offset(&self) -> &[f64] {
        &self.b
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(r, xi)| r * xi).sum::<f64>() + bi)
            .collect()
    }

    pub fn left_inverse(&self, x: &[f64]) -> Vec<f64> {
        (0..self.source_dim())
            .map(|j| (0..self.target_dim()).map(|i| self.a[i][j] * (x[i] - self.b[i])).sum())
            .collect()
    }

    /// Component expressions of `Υ` in the source variables.
    pub fn apply_exprs(&self) -> Vec<Expr> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| Expr::sum(row.iter().enumerate().map(|(j, &r)| Expr::var(j) * r)) + bi)
            .collect()
    }

    fn left_inverse_exprs(&self) -> Vec<Expr> {
        (0..self.source_dim())
            .map(|j| {
                Expr::sum((0..self.target_dim()).map(|i| (Expr::var(i) - self.b[i]) * self.a[i][j]))
            })
            .collect()
    }

    /// `φ ∘ Υ`.
    pub fn pull_scalar(&self, phi: &SmoothScalarField) -> Result<SmoothScalarField> {
        check_dim("pullback", self.target_dim(), phi.dim())?;
        let e = phi.expr().substitute(&self.apply_exprs());
        let support = phi
            .support()
            .map(|b| Ball::new(self.left_inverse(&b.center), b.radius));
        Ok(SmoothScalarField::with_support(self.source_dim(), e, support))
    }

    pub fn pull_form(&self, omega: &FormOnX) -> Result<FormOnX> {
        let f = omega.pullback_affine(&self.a, &self.b)?;
        let support = omega
            .support()
            .map(|b| Ball::new(self.left_inverse(&b.center), b.radius));
        Ok(f.with_support(support))
    }

    /// Extension of `v'` to a field `v` on `ℝᵐ` with `v ∘ Υ = dΥ · v'`.
    pub fn extend_field(&self, v: &SmoothVectorField) -> Result<SmoothVectorField> {
        check_dim("field extension", self.source_dim(), v.dim())?;
        let rho = self
            .normal_radius
            .ok_or_else(|| LiftedError::Unsupported("embedding has no vector-field extension rule".into()))?;
        let m = self.target_dim();
        let k = self.source_dim();
        let coords = self.left_inverse_exprs();
        // normal displacement x - b - A Aᵀ(x - b)
        let normal: Vec<Expr> = (0..m)
            .map(|i| {
                (Expr::var(i) - self.b[i]) - Expr::sum((0..k).map(|j| &coords[j] * self.a[i][j]))
            })
            .collect();
        let cutoff = (Expr::sum(normal.iter().map(|n| n.powi(2))) * (1.0 / (rho * rho))).bump_profile();
        let inner: Vec<Expr> = v.components().iter().map(|c| c.substitute(&coords)).collect();
        let comps = (0..m)
            .map(|i| &cutoff * Expr::sum((0..k).map(|j| &inner[j] * self.a[i][j])))
            .collect();
        let support = v.support().map(|s| {
            Ball::new(self.apply(&s.center), (s.radius * s.radius + rho * rho).sqrt())
        });
        let ext = SmoothVectorField::from_exprs(comps, support);
        Ok(if v.is_complete() { ext.assume_complete() } else { ext })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::field::make_bump;

    #[test]
    fn affine_inverse_roundtrip() {
        let d = Diffeo::affine(vec![vec![2.0, 1.0], vec![0.5, 1.0]], vec![0.3, -0.2]).unwrap();
        let x = [0.7, 1.1];
        let y = d.apply(&x).unwrap();
        let back = d.inverse().unwrap().apply(&y).unwrap();
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
        assert!(Diffeo::affine(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn extension_agrees_on_image() {
        let emb = AffineEmbedding::coordinate_inclusion(1, 2).unwrap();
        let b = make_bump(&[0.2], 1.0).unwrap();
        let v = SmoothVectorField::masked(&b, vec![Expr::var(0) + 1.0]).unwrap();
        let ext = emb.extend_field(&v).unwrap();
        for s in [-0.5, 0.0, 0.4, 0.9] {
            let lhs = ext.eval(&emb.apply(&[s]));
            assert!((lhs[0] - v.eval(&[s])[0]).abs() < 1e-15);
            assert_eq!(lhs[1], 0.0);
        }
        // outside the normal tube the extension vanishes
        assert_eq!(ext.eval(&[0.1, 1.5]), vec![0.0, 0.0]);
        let no_ext = AffineEmbedding::new(vec![vec![1.0], vec![0.0]], vec![0.0, 0.0], None).unwrap();
        assert!(matches!(no_ext.extend_field(&v), Err(LiftedError::Unsupported(_))));
    }

    #[test]
    fn rejects_non_orthonormal() {
        assert!(AffineEmbedding::new(vec![vec![2.0], vec![0.0]], vec![0.0, 0.0], None).is_err());
    }
}
