use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_dim, invalid, Result};
use crate::expr::{Expr, Tape};

/// Closed ball used as compact-support metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist(&self.center, x) < self.radius
    }

    /// Ball containing both (for sums).
    pub fn union(&self, other: &Ball) -> Ball {
        let d = dist(&self.center, &other.center);
        if d + other.radius <= self.radius {
            return self.clone();
        }
        if d + self.radius <= other.radius {
            return other.clone();
        }
        let radius = 0.5 * (d + self.radius + other.radius);
        let t = (radius - self.radius) / d;
        let center = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| a + t * (b - a))
            .collect();
        Ball { center, radius: radius * (1.0 + 1e-12) }
    }

    /// A ball containing the intersection (for products).
    pub fn intersect(&self, other: &Ball) -> Ball {
        if self.radius <= other.radius {
            self.clone()
        } else {
            other.clone()
        }
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn meet(a: &Option<Ball>, b: &Option<Ball>) -> Option<Ball> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.intersect(b)),
        (Some(a), None) => Some(a.clone()),
        (None, Some(b)) => Some(b.clone()),
        (None, None) => None,
    }
}

pub(crate) fn join(a: &Option<Ball>, b: &Option<Ball>) -> Option<Ball> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.union(b)),
        _ => None,
    }
}

/// Whether derivative oracles are closed-form or finite-difference fallbacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Exact,
    FdFallback,
}

struct ScalarInner {
    dim: usize,
    expr: Expr,
    support: Option<Ball>,
    tape: OnceLock<Tape>,
    grad: OnceLock<(Vec<Expr>, Tape)>,
    hess: OnceLock<Tape>,
}

/// A smooth function `ℝᵐ → ℝ` with gradient and Hessian oracles.
#[derive(Clone)]
pub struct SmoothScalarField(Arc<ScalarInner>);

impl SmoothScalarField {
    pub fn from_expr(dim: usize, expr: Expr) -> Self {
        Self::with_support(dim, expr, None)
    }

    pub fn with_support(dim: usize, expr: Expr, support: Option<Ball>) -> Self {
        debug_assert!(expr.max_var().is_none_or(|v| v < dim));
        SmoothScalarField(Arc::new(ScalarInner {
            dim,
            expr,
            support,
            tape: OnceLock::new(),
            grad: OnceLock::new(),
            hess: OnceLock::new(),
        }))
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let support = if c == 0.0 { Some(Ball::new(vec![0.0; dim], f64::MIN_POSITIVE)) } else { None };
        Self::with_support(dim, Expr::constant(c), support)
    }

    /// Coordinate function `x ↦ x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        Self::from_expr(dim, Expr::var(i))
    }

    /// Wraps a user function without closed-form derivatives.
    pub fn from_fn(
        dim: usize,
        name: &str,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        support: Option<Ball>,
    ) -> Self {
        let args = (0..dim).map(Expr::var).collect();
        Self::with_support(dim, Expr::opaque(name, Arc::new(f), args), support)
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.0.expr
    }

    pub fn support(&self) -> Option<&Ball> {
        self.0.support.as_ref()
    }

    pub fn is_compact(&self) -> bool {
        self.0.support.is_some()
    }

    pub fn precision(&self) -> Precision {
        if self.0.expr.has_opaque() {
            Precision::FdFallback
        } else {
            Precision::Exact
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.tape.get_or_init(|| Tape::compile(std::slice::from_ref(&self.0.expr))).eval(x)[0]
    }

    fn grad_parts(&self) -> &(Vec<Expr>, Tape) {
        self.0.grad.get_or_init(|| {
            let g = self.0.expr.gradient(self.0.dim);
            let t = Tape::compile(&g);
            (g, t)
        })
    }

    pub fn grad_exprs(&self) -> &[Expr] {
        &self.grad_parts().0
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.grad_parts().1.eval(x)
    }

    /// Row-major `m × m` Hessian.
    pub fn hess(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let m = self.0.dim;
        let flat = self
            .0
            .hess
            .get_or_init(|| {
                let g = self.grad_exprs();
                let h: Vec<Expr> = g.iter().flat_map(|gi| (0..m).map(move |j| gi.diff(j))).collect();
                Tape::compile(&h)
            })
            .eval(x);
        flat.chunks(m).map(|r| r.to_vec()).collect()
    }

    /// `∂φ/∂x_i` as a field with the same support.
    pub fn partial(&self, i: usize) -> SmoothScalarField {
        Self::with_support(self.dim(), self.grad_exprs()[i].clone(), self.0.support.clone())
    }

    pub fn add(&self, other: &SmoothScalarField) -> Result<SmoothScalarField> {
        check_dim("field sum", self.dim(), other.dim())?;
        Ok(Self::with_support(
            self.dim(),
            self.expr() + other.expr(),
            join(&self.0.support, &other.0.support),
        ))
    }

    pub fn mul(&self, other: &SmoothScalarField) -> Result<SmoothScalarField> {
        check_dim("field product", self.dim(), other.dim())?;
        Ok(Self::with_support(
            self.dim(),
            self.expr() * other.expr(),
            meet(&self.0.support, &other.0.support),
        ))
    }

    pub fn scale(&self, c: f64) -> SmoothScalarField {
        Self::with_support(self.dim(), self.expr() * c, self.0.support.clone())
    }

    /// `ε ∘ φ` for a one-variable field `ε`; support is kept only when `ε(0) = 0`.
    pub fn compose_outer(&self, outer: &SmoothScalarField) -> Result<SmoothScalarField> {
        check_dim("outer function", 1, outer.dim())?;
        let support = if outer.eval(&[0.0]) == 0.0 { self.0.support.clone() } else { None };
        Ok(Self::with_support(
            self.dim(),
            outer.expr().substitute(std::slice::from_ref(self.expr())),
            support,
        ))
    }
}

impl fmt::Debug for SmoothScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothScalarField")
            .field("dim", &self.0.dim)
            .field("support", &self.0.support)
            .finish()
    }
}

/// `b(x) = exp(1 − 1/(1−r²))` with `r = |x−center|/radius`, zero for `r ≥ 1`.
pub fn make_bump(center: &[f64], radius: f64) -> Result<SmoothScalarField> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(invalid(format!("bump radius must be positive, got {radius}")));
    }
    let q = bump_argument(center, radius);
    Ok(SmoothScalarField::with_support(
        center.len(),
        q.bump_profile(),
        Some(Ball::new(center.to_vec(), radius)),
    ))
}

pub(crate) fn bump_argument(center: &[f64], radius: f64) -> Expr {
    let r2 = radius * radius;
    Expr::sum(center.iter().enumerate().map(|(i, c)| (Expr::var(i) - *c).powi(2))) * (1.0 / r2)
}

struct VectorInner {
    dim: usize,
    comps: Vec<Expr>,
    support: Option<Ball>,
    affine: bool,
    complete: bool,
    /// Globally Lipschitz by construction (sums of compact and affine fields).
    lipschitz: bool,
    tape: OnceLock<Tape>,
    jac: OnceLock<(Vec<Vec<Expr>>, Tape)>,
}

/// A smooth vector field `ℝᵐ → ℝᵐ` with a Jacobian oracle.
#[derive(Clone)]
pub struct SmoothVectorField(Arc<VectorInner>);

impl SmoothVectorField {
    pub fn from_exprs(comps: Vec<Expr>, support: Option<Ball>) -> Self {
        Self::build(comps, support, false)
    }

    fn build(comps: Vec<Expr>, support: Option<Ball>, affine: bool) -> Self {
        let dim = comps.len();
        SmoothVectorField(Arc::new(VectorInner {
            dim,
            comps,
            support,
            affine,
            complete: false,
            lipschitz: false,
            tape: OnceLock::new(),
            jac: OnceLock::new(),
        }))
    }

    pub fn zero(dim: usize) -> Self {
        Self::build(vec![Expr::zero(); dim], Some(Ball::new(vec![0.0; dim], f64::MIN_POSITIVE)), true)
    }

    pub fn constant(c: &[f64]) -> Self {
        Self::build(c.iter().map(|&v| Expr::constant(v)).collect(), None, true)
    }

    /// `x ↦ A x + b` with `A` row-major; complete since globally Lipschitz.
    pub fn linear(a: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let m = b.len();
        if a.len() != m || a.iter().any(|r| r.len() != m) {
            return Err(invalid("linear field: matrix must be m x m matching offset"));
        }
        let comps = a
            .iter()
            .zip(b)
            .map(|(row, &bi)| {
                Expr::sum(row.iter().enumerate().map(|(j, &aij)| Expr::var(j) * aij)) + bi
            })
            .collect();
        Ok(Self::build(comps, None, true))
    }

    /// `x ↦ bump(x) · p(x)` for polynomial (or any) components `p`.
    pub fn masked(bump: &SmoothScalarField, comps: Vec<Expr>) -> Result<Self> {
        check_dim("masked field", bump.dim(), comps.len())?;
        let support = bump.support().cloned();
        Ok(Self::from_exprs(
            comps.into_iter().map(|c| bump.expr() * c).collect(),
            support,
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn components(&self) -> &[Expr] {
        &self.0.comps
    }

    pub fn support(&self) -> Option<&Ball> {
        self.0.support.as_ref()
    }

    pub fn is_affine(&self) -> bool {
        self.0.affine
    }

    /// True when the field has compact support, is affine, or was marked
    /// complete by its constructor.
    pub fn is_complete(&self) -> bool {
        self.is_lipschitz() || self.0.complete
    }

    fn is_lipschitz(&self) -> bool {
        self.0.support.is_some() || self.0.affine || self.0.lipschitz
    }

    fn mark_lipschitz(self, yes: bool) -> Self {
        if !yes || self.is_lipschitz() {
            return self;
        }
        let inner = VectorInner {
            dim: self.0.dim,
            comps: self.0.comps.clone(),
            support: self.0.support.clone(),
            affine: self.0.affine,
            complete: self.0.complete,
            lipschitz: true,
            tape: OnceLock::new(),
            jac: OnceLock::new(),
        };
        SmoothVectorField(Arc::new(inner))
    }

    /// Declares the field complete (e.g. globally Lipschitz by construction).
    pub fn assume_complete(self) -> Self {
        let inner = &self.0;
        SmoothVectorField(Arc::new(VectorInner {
            dim: inner.dim,
            comps: inner.comps.clone(),
            support: inner.support.clone(),
            affine: inner.affine,
            complete: true,
            lipschitz: inner.lipschitz,
            tape: OnceLock::new(),
            jac: OnceLock::new(),
        }))
    }

    pub fn precision(&self) -> Precision {
        if self.0.comps.iter().any(|c| c.has_opaque()) {
            Precision::FdFallback
        } else {
            Precision::Exact
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.0.tape.get_or_init(|| Tape::compile(&self.0.comps)).eval(x)
    }

    fn jac_parts(&self) -> &(Vec<Vec<Expr>>, Tape) {
        self.0.jac.get_or_init(|| {
            let j: Vec<Vec<Expr>> = self.0.comps.iter().map(|c| c.gradient(self.0.dim)).collect();
            let flat: Vec<Expr> = j.iter().flatten().cloned().collect();
            let t = Tape::compile(&flat);
            (j, t)
        })
    }

    /// `J[i][j] = ∂v_i/∂x_j` as expressions.
    pub fn jacobian_exprs(&self) -> &[Vec<Expr>] {
        &self.jac_parts().0
    }

    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let flat = self.jac_parts().1.eval(x);
        flat.chunks(self.0.dim).map(|r| r.to_vec()).collect()
    }

    pub fn add(&self, other: &SmoothVectorField) -> Result<SmoothVectorField> {
        check_dim("vector field sum", self.dim(), other.dim())?;
        let comps = self.0.comps.iter().zip(&other.0.comps).map(|(a, b)| a + b).collect();
        Ok(Self::build(
            comps,
            join(&self.0.support, &other.0.support),
            self.0.affine && other.0.affine,
        )
        .mark_lipschitz(self.is_lipschitz() && other.is_lipschitz()))
    }

    pub fn scale(&self, c: f64) -> SmoothVectorField {
        Self::build(
            self.0.comps.iter().map(|e| e * c).collect(),
            self.0.support.clone(),
            self.0.affine,
        )
        .mark_lipschitz(self.is_lipschitz())
    }

    /// Multiplies every component by a scalar field.
    pub fn scale_by(&self, f: &SmoothScalarField) -> Result<SmoothVectorField> {
        check_dim("scaled field", self.dim(), f.dim())?;
        Ok(Self::build(
            self.0.comps.iter().map(|e| e * f.expr()).collect(),
            meet(&self.0.support, &f.0.support),
            false,
        ))
    }
}

impl fmt::Debug for SmoothVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothVectorField")
            .field("dim", &self.0.dim)
            .field("support", &self.0.support)
            .field("affine", &self.0.affine)
            .finish()
    }
}

/// `[v,w](x) = Jw(x)·v(x) − Jv(x)·w(x)`.
pub fn lie_bracket(v: &SmoothVectorField, w: &SmoothVectorField) -> Result<SmoothVectorField> {
    check_dim("lie bracket", v.dim(), w.dim())?;
    let jv = v.jacobian_exprs();
    let jw = w.jacobian_exprs();
    let comps = (0..v.dim())
        .map(|i| Expr::dot(&jw[i], v.components()) - Expr::dot(&jv[i], w.components()))
        .collect();
    Ok(SmoothVectorField::build(
        comps,
        meet(&v.0.support, &w.0.support),
        v.is_affine() && w.is_affine(),
    ))
}

/// `d_vφ(x) = ⟨v(x), ∇φ(x)⟩`.
pub fn directional_derivative_scalar(
    v: &SmoothVectorField,
    phi: &SmoothScalarField,
) -> Result<SmoothScalarField> {
    check_dim("directional derivative", v.dim(), phi.dim())?;
    Ok(SmoothScalarField::with_support(
        phi.dim(),
        Expr::dot(v.components(), phi.grad_exprs()),
        meet(&v.0.support, &phi.0.support),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        let b = make_bump(&[0.0], 1.0).unwrap();
        assert_eq!(b.eval(&[0.0]), 1.0);
        assert_eq!(b.eval(&[1.0]), 0.0);
        assert_eq!(b.eval(&[-2.5]), 0.0);
        // exp(-1/3)
        assert!((b.eval(&[0.5]) - 0.716_531_310_573_789_2).abs() < 1e-15);
        assert!(make_bump(&[0.0], 0.0).is_err());
        assert!(make_bump(&[0.0], -1.0).is_err());
    }

    #[test]
    fn bump_derivatives_vanish_outside() {
        let b = make_bump(&[0.5, -0.5], 0.7).unwrap();
        for x in [[1.3, -0.5], [0.5, 0.2], [2.0, 2.0]] {
            assert_eq!(b.eval(&x), 0.0);
            assert!(b.grad(&x).iter().all(|&g| g == 0.0));
            assert!(b.hess(&x).iter().flatten().all(|&h| h == 0.0));
        }
    }

    #[test]
    fn bracket_of_linear_fields() {
        let a = vec![vec![0.0, -1.0], vec![1.0, 0.0]];
        let b = vec![vec![1.0, 2.0], vec![0.0, -1.0]];
        let v = SmoothVectorField::linear(&a, &[0.0, 0.0]).unwrap();
        let w = SmoothVectorField::linear(&b, &[0.0, 0.0]).unwrap();
        let br = lie_bracket(&v, &w).unwrap();
        assert!(br.is_affine());
        let x = [0.3, -1.2];
        // (BA - AB) x
        let mul = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..2).map(|i| (0..2).map(|j| (0..2).map(|k| p[i][k] * q[k][j]).sum()).collect()).collect()
        };
        let ba = mul(&b, &a);
        let ab = mul(&a, &b);
        let got = br.eval(&x);
        for i in 0..2 {
            let want: f64 = (0..2).map(|j| (ba[i][j] - ab[i][j]) * x[j]).sum();
            assert!((got[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn bracket_antisymmetry_and_constants() {
        let bump = make_bump(&[0.0, 0.0], 2.0).unwrap();
        let v = SmoothVectorField::masked(&bump, vec![Expr::var(1), Expr::var(0) * Expr::var(0)]).unwrap();
        let vv = lie_bracket(&v, &v).unwrap();
        assert!(vv.eval(&[0.4, 0.1]).iter().all(|c| c.abs() < 1e-15));
        let c1 = SmoothVectorField::constant(&[1.0, 2.0]);
        let c2 = SmoothVectorField::constant(&[-3.0, 0.5]);
        assert!(lie_bracket(&c1, &c2).unwrap().components().iter().all(|c| c.is_zero()));
        assert!(lie_bracket(&c1, &SmoothVectorField::constant(&[1.0])).is_err());
    }

    #[test]
    fn directional_derivative_examples() {
        let e1 = SmoothVectorField::constant(&[1.0, 0.0]);
        let x1 = SmoothScalarField::coordinate(2, 0);
        let d = directional_derivative_scalar(&e1, &x1).unwrap();
        assert_eq!(d.eval(&[5.0, -3.0]), 1.0);
        // v ⟂ ∇φ for φ = x_2
        let x2 = SmoothScalarField::coordinate(2, 1);
        assert_eq!(directional_derivative_scalar(&e1, &x2).unwrap().eval(&[1.0, 1.0]), 0.0);
    }

    #[test]
    fn support_metadata_propagates() {
        let a = make_bump(&[0.0, 0.0], 1.0).unwrap();
        let b = make_bump(&[3.0, 0.0], 0.5).unwrap();
        let s = a.add(&b).unwrap();
        let sup = s.support().unwrap();
        assert!(sup.radius >= 2.0);
        assert_eq!(a.mul(&b).unwrap().support().unwrap().radius, 0.5);
        let x = SmoothScalarField::coordinate(2, 0);
        assert!(a.add(&x).unwrap().support().is_none());
    }

    #[test]
    fn fd_fallback_is_tagged() {
        let f = SmoothScalarField::from_fn(2, "user", |x| x[0].sin() * x[1], None);
        assert_eq!(f.precision(), Precision::FdFallback);
        let g = f.grad(&[0.4, 2.0]);
        assert!((g[0] - 0.4f64.cos() * 2.0).abs() < 1e-8);
        assert_eq!(make_bump(&[0.0], 1.0).unwrap().precision(), Precision::Exact);
    }
}
