//! Cylinder functions on finite particle measures `μ = Σ wᵢ δ_{xᵢ}`.

mod calculus;
mod dirichlet;

pub use calculus::{
    convolution_pullback, density_pullback, embedding_diff_residual, embedding_pullback,
    flow_fd_derivative, lie_compat_residual, lifted_derivative, CylinderFunctionM, MeasureGeometry,
};
pub use dirichlet::{dirichlet_form, gradient, markov_check, tangent_inner_product, MarkovReport};

use std::fmt::Write as _;

use crate::error::{check_dim, invalid, LiftedError, Result};
use crate::smooth::{AffineEmbedding, Diffeo, SmoothScalarField};

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleMeasure {
    dim: usize,
    atoms: Vec<(Vec<f64>, f64)>,
}

impl ParticleMeasure {
    /// Weights must be strictly positive and finite.
    pub fn new(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        for (x, w) in &atoms {
            check_dim("atom", dim, x.len())?;
            if !(*w > 0.0) || !w.is_finite() {
                return Err(invalid(format!("atom weight must be positive, got {w}")));
            }
        }
        Ok(ParticleMeasure { dim, atoms })
    }

    pub fn zero(dim: usize) -> Self {
        ParticleMeasure { dim, atoms: Vec::new() }
    }

    pub fn dirac(x: Vec<f64>) -> Self {
        ParticleMeasure { dim: x.len(), atoms: vec![(x, 1.0)] }
    }

    /// A configuration: every weight is 1.
    pub fn configuration(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dim, points.into_iter().map(|x| (x, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Vec<f64>, f64)] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// `∫φ dμ = Σ wᵢ φ(xᵢ)`.
    pub fn integrate(&self, phi: &SmoothScalarField) -> Result<f64> {
        check_dim("integrand", self.dim, phi.dim())?;
        Ok(self.atoms.iter().map(|(x, w)| w * phi.eval(x)).sum())
    }

    pub fn integrate_fn(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.dim, self.atoms.iter().map(|(x, w)| (x.clone(), c * w)).collect())
    }

    /// `θ_*μ`: atoms move, weights are kept.
    pub fn pushforward(&self, theta: &Diffeo) -> Result<Self> {
        check_dim("pushforward", self.dim, theta.dim())?;
        let atoms = self
            .atoms
            .iter()
            .map(|(x, w)| Ok((theta.apply(x)?, *w)))
            .collect::<Result<_>>()?;
        Ok(ParticleMeasure { dim: self.dim, atoms })
    }

    /// `Υ_*μ'` for a measure on the source of `Υ`.
    pub fn embed(&self, emb: &AffineEmbedding) -> Result<Self> {
        check_dim("embedding pushforward", emb.source_dim(), self.dim)?;
        let atoms = self.atoms.iter().map(|(x, w)| (emb.apply(x), *w)).collect();
        Ok(ParticleMeasure { dim: emb.target_dim(), atoms })
    }

    /// `μ ⋆ ν` on the group `(ℝᵐ, +)`.
    pub fn convolve(&self, nu: &ParticleMeasure) -> Result<Self> {
        check_dim("convolution", self.dim, nu.dim)?;
        let mut atoms = Vec::with_capacity(self.atoms.len() * nu.atoms.len());
        for (x, w) in &self.atoms {
            for (y, u) in &nu.atoms {
                atoms.push((x.iter().zip(y).map(|(a, b)| a + b).collect(), w * u));
            }
        }
        Ok(ParticleMeasure { dim: self.dim, atoms })
    }

    /// `f̂(μ) = f·μ`; atoms where `f` vanishes are dropped.
    pub fn with_density(&self, f: &SmoothScalarField) -> Result<Self> {
        check_dim("density", self.dim, f.dim())?;
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (x, w) in &self.atoms {
            let d = f.eval(x);
            if d < 0.0 {
                return Err(LiftedError::DomainViolation(format!(
                    "density is negative ({d}) at an atom"
                )));
            }
            if d > 0.0 {
                atoms.push((x.clone(), w * d));
            }
        }
        Ok(ParticleMeasure { dim: self.dim, atoms })
    }

    /// Parses lines `w x₁ … x_m`; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut atoms = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| LiftedError::Parse { line: i + 1, msg };
            let nums = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| err(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let (w, x) = nums.split_first().ok_or_else(|| err("empty atom".into()))?;
            match dim {
                None => dim = Some(x.len()),
                Some(d) if d != x.len() => {
                    return Err(err(format!("expected {d} coordinates, got {}", x.len())))
                }
                _ => {}
            }
            if !(*w > 0.0) || !w.is_finite() {
                return Err(err(format!("weight must be positive, got {w}")));
            }
            atoms.push((x.to_vec(), *w));
        }
        let dim = dim.ok_or_else(|| invalid("measure file has no atoms; dimension unknown"))?;
        Ok(ParticleMeasure { dim, atoms })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (x, w) in &self.atoms {
            let _ = write!(s, "{w:?}");
            for c in x {
                let _ = write!(s, " {c:?}");
            }
            s.push('\n');
        }
        s
    }
}

/// A finite ensemble `Θ = Σ pⱼ δ_{μⱼ}`.
#[derive(Clone, Debug)]
pub struct RandomMeasure {
    ensemble: Vec<(ParticleMeasure, f64)>,
}

impl RandomMeasure {
    pub fn new(ensemble: Vec<(ParticleMeasure, f64)>) -> Result<Self> {
        if ensemble.is_empty() {
            return Err(invalid("random measure needs at least one member"));
        }
        if ensemble.iter().any(|(_, p)| !(*p >= 0.0)) {
            return Err(invalid("ensemble probabilities must be nonnegative"));
        }
        let total: f64 = ensemble.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("ensemble probabilities sum to {total}, not 1")));
        }
        let d = ensemble[0].0.dim();
        for (m, _) in &ensemble {
            check_dim("ensemble member", d, m.dim())?;
        }
        Ok(RandomMeasure { ensemble })
    }

    /// Equal weights over the given members.
    pub fn uniform(members: Vec<ParticleMeasure>) -> Result<Self> {
        let p = 1.0 / members.len().max(1) as f64;
        Self::new(members.into_iter().map(|m| (m, p)).collect())
    }

    pub fn members(&self) -> &[(ParticleMeasure, f64)] {
        &self.ensemble
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::smooth::{make_bump, SmoothVectorField};

    fn mu() -> ParticleMeasure {
        ParticleMeasure::new(2, vec![(vec![0.1, 0.2], 0.5), (vec![-0.3, 0.4], 2.0)]).unwrap()
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(ParticleMeasure::new(1, vec![(vec![0.0], 0.0)]).is_err());
        assert!(ParticleMeasure::new(1, vec![(vec![0.0], -1.0)]).is_err());
        assert!(ParticleMeasure::new(2, vec![(vec![0.0], 1.0)]).is_err());
    }

    #[test]
    fn pushforward_moves_atoms() {
        let m = mu();
        assert_eq!(m.pushforward(&Diffeo::identity(2)).unwrap(), m);
        let d = ParticleMeasure::dirac(vec![1.0, 2.0]);
        let t = d.pushforward(&Diffeo::translation(&[0.5, -1.0])).unwrap();
        assert_eq!(t.atoms()[0].0, vec![1.5, 1.0]);
        let v = SmoothVectorField::masked(&make_bump(&[0.0, 0.0], 2.0).unwrap(), vec![Expr::var(1), -Expr::var(0)]).unwrap();
        let theta = Diffeo::Flow { field: v, t: 0.3 };
        let phi = SmoothScalarField::from_expr(2, Expr::var(0).sin() * Expr::var(1));
        let lhs = m.pushforward(&theta).unwrap().integrate(&phi).unwrap();
        let rhs = m.integrate_fn(|x| phi.eval(&theta.apply(x).unwrap()));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn convolution_and_density() {
        let a = ParticleMeasure::dirac(vec![1.0, 0.0]);
        let b = ParticleMeasure::dirac(vec![0.0, 2.0]);
        assert_eq!(a.convolve(&b).unwrap().atoms()[0].0, vec![1.0, 2.0]);
        let m = mu();
        assert_eq!(m.convolve(&ParticleMeasure::dirac(vec![0.0, 0.0])).unwrap(), m);
        let nu = ParticleMeasure::new(2, vec![(vec![1.0, 1.0], 3.0), (vec![0.0, 0.5], 0.25)]).unwrap();
        let c = m.convolve(&nu).unwrap();
        assert!((c.total_mass() - m.total_mass() * nu.total_mass()).abs() < 1e-12);
        assert_eq!(m.with_density(&SmoothScalarField::constant(2, 1.0)).unwrap(), m);
        assert!(m.with_density(&SmoothScalarField::constant(2, 0.0)).unwrap().is_zero());
        let f = SmoothScalarField::from_expr(2, Expr::var(0).powi(2) + 1.0);
        let phi = SmoothScalarField::from_expr(2, Expr::var(1).exp());
        let lhs = m.with_density(&f).unwrap().integrate(&phi).unwrap();
        let rhs = m.integrate(&f.mul(&phi).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let neg = SmoothScalarField::from_expr(2, Expr::var(0));
        assert!(matches!(m.with_density(&neg), Err(LiftedError::DomainViolation(_))));
    }

    #[test]
    fn embedding_moves_atoms_onto_axis() {
        let emb = AffineEmbedding::coordinate_inclusion(1, 2).unwrap();
        let d = ParticleMeasure::dirac(vec![0.7]).embed(&emb).unwrap();
        assert_eq!(d.atoms()[0].0, vec![0.7, 0.0]);
    }

    #[test]
    fn text_roundtrip() {
        let m = mu();
        let back = ParticleMeasure::parse(&format!("# two atoms\n{}", m.to_text())).unwrap();
        assert_eq!(back, m);
        assert!(matches!(ParticleMeasure::parse("1 0 0\n1 0\n"), Err(LiftedError::Parse { line: 2, .. })));
        assert!(matches!(ParticleMeasure::parse("0 1.0\n"), Err(LiftedError::Parse { line: 1, .. })));
    }

    #[test]
    fn ensemble_normalization() {
        assert!(RandomMeasure::new(vec![(mu(), 0.5)]).is_err());
        assert!(RandomMeasure::uniform(vec![mu(), mu()]).is_ok());
    }
}
