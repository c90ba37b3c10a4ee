//! Cylinder functions `F[ψ: g₁..gₙ](p) = ψ(⟨g₁,p⟩, …, ⟨gₙ,p⟩)` and the
//! chain-rule combinator `ξ(r, s) = Σ sᵢ ∂ψ/∂rᵢ(r)`.
//!
//! The measure, submanifold and curve instances share this shape; they differ
//! only in the generator type and its pairing with a point.

use std::fmt;

use crate::error::{check_dim, LiftedError, Result};
use crate::expr::Expr;
use crate::smooth::{SmoothScalarField, SmoothVectorField};

/// Lifted derivatives need a flow on the base space: `v` must be compactly
/// supported or known complete.
pub fn require_liftable(v: &SmoothVectorField) -> Result<()> {
    if v.support().is_some() || v.is_complete() {
        Ok(())
    } else {
        Err(LiftedError::Unsupported(
            "lifted derivative needs a compactly supported or complete vector field".into(),
        ))
    }
}

/// A generator of a cylinder algebra: something that pairs with points.
pub trait Generator: Clone + Send + Sync {
    type Point;

    fn pair(&self, p: &Self::Point) -> Result<f64>;
}

#[derive(Clone)]
pub struct Cylinder<G> {
    psi: SmoothScalarField,
    gens: Vec<G>,
}

/// `ξ(r₁..rₙ, s₁..sₙ) = Σ sᵢ ∂ψ/∂rᵢ(r)` on `ℝ^{2n}`.
pub fn xi(psi: &SmoothScalarField) -> SmoothScalarField {
    let n = psi.dim();
    let e = Expr::sum(
        psi.grad_exprs()
            .iter()
            .enumerate()
            .map(|(i, d)| Expr::var(n + i) * d),
    );
    SmoothScalarField::from_expr(2 * n, e)
}

impl<G: Generator> Cylinder<G> {
    pub fn new(psi: SmoothScalarField, gens: Vec<G>) -> Result<Self> {
        check_dim("cylinder function arity", psi.dim(), gens.len())?;
        Ok(Cylinder { psi, gens })
    }

    /// The constant function `c` (no generators).
    pub fn constant(c: f64) -> Self {
        Cylinder { psi: SmoothScalarField::from_expr(0, Expr::constant(c)), gens: Vec::new() }
    }

    pub fn psi(&self) -> &SmoothScalarField {
        &self.psi
    }

    pub fn generators(&self) -> &[G] {
        &self.gens
    }

    pub fn arity(&self) -> usize {
        self.gens.len()
    }

    /// True when ψ carries compact-support metadata.
    pub fn has_compact_psi(&self) -> bool {
        self.psi.is_compact()
    }

    pub fn moments(&self, p: &G::Point) -> Result<Vec<f64>> {
        self.gens.iter().map(|g| g.pair(p)).collect()
    }

    pub fn eval(&self, p: &G::Point) -> Result<f64> {
        Ok(self.psi.eval(&self.moments(p)?))
    }

    /// `F[ξ: g₁..gₙ, lift(g₁)..lift(gₙ)]`, pruned of unused generators.
    pub fn lift_with(&self, mut lift: impl FnMut(&G) -> Result<G>) -> Result<Self> {
        let mut gens = self.gens.clone();
        for g in &self.gens {
            gens.push(lift(g)?);
        }
        Ok(Cylinder { psi: xi(&self.psi), gens }.pruned())
    }

    /// `F[ψ: h(g₁)..h(gₙ)]`.
    pub fn map_generators<H: Generator>(&self, h: impl FnMut(&G) -> Result<H>) -> Result<Cylinder<H>> {
        Ok(Cylinder { psi: self.psi.clone(), gens: self.gens.iter().map(h).collect::<Result<_>>()? })
    }

    /// `F[∂ψ/∂rᵢ: g₁..gₙ]`.
    pub fn partial(&self, i: usize) -> Self {
        Cylinder { psi: self.psi.partial(i), gens: self.gens.clone() }
    }

    /// `ε ∘ F = F[ε∘ψ: …]` for a one-variable `ε`.
    pub fn compose_outer(&self, eps: &SmoothScalarField) -> Result<Self> {
        Ok(Cylinder { psi: self.psi.compose_outer(eps)?, gens: self.gens.clone() })
    }

    fn combine(&self, other: &Self, op: impl Fn(Expr, Expr) -> Expr, compact: bool) -> Self {
        let n = self.arity();
        let e = op(self.psi.expr().clone(), other.psi.expr().shift_vars(n));
        let support = if compact && self.psi.is_compact() && other.psi.is_compact() {
            // supp(ψ ⊗ ψ') ⊂ B_a × B_b
            let a = self.psi.support().unwrap();
            let b = other.psi.support().unwrap();
            let mut center = a.center.clone();
            center.extend_from_slice(&b.center);
            Some(crate::smooth::Ball::new(center, (a.radius.powi(2) + b.radius.powi(2)).sqrt()))
        } else {
            None
        };
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().cloned());
        Cylinder { psi: SmoothScalarField::with_support(gens.len(), e, support), gens }
    }

    /// `F + F' = F[ψ ⊕ ψ': g, g']`.
    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b, false)
    }

    /// `F · F' = F[ψ ⊗ ψ': g, g']`.
    pub fn mul(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a * b, true)
    }

    pub fn scale(&self, c: f64) -> Self {
        Cylinder { psi: self.psi.scale(c), gens: self.gens.clone() }
    }

    /// Drops generators whose argument does not occur in ψ.
    pub fn pruned(self) -> Self {
        let n = self.arity();
        let used = self.psi.expr().vars_used(n);
        if used.iter().all(|u| *u) {
            return self;
        }
        let mut remap = vec![0usize; n];
        let mut gens = Vec::new();
        for (i, g) in self.gens.into_iter().enumerate() {
            if used[i] {
                remap[i] = gens.len();
                gens.push(g);
            }
        }
        let e = self.psi.expr().map_vars(&|i| Expr::var(remap[i]));
        let support = self.psi.support().map(|b| {
            let center = (0..n).filter(|&i| used[i]).map(|i| b.center[i]).collect();
            crate::smooth::Ball::new(center, b.radius)
        });
        Cylinder { psi: SmoothScalarField::with_support(gens.len(), e, support), gens }
    }
}

impl<G> fmt::Debug for Cylinder<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cylinder(arity {})", self.gens.len())
    }
}
