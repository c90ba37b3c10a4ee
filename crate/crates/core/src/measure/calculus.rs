use rand::{Rng, RngCore};

use crate::cylinder::{require_liftable, Cylinder, Generator};
use crate::error::{check_dim, Result};
use crate::expr::Expr;
use crate::geometry::Geometry;
use crate::measure::ParticleMeasure;
use crate::smooth::{
    directional_derivative_scalar, lie_bracket, AffineEmbedding, Ball, Diffeo, SmoothScalarField,
    SmoothVectorField,
};

impl Generator for SmoothScalarField {
    type Point = ParticleMeasure;

    fn pair(&self, mu: &ParticleMeasure) -> Result<f64> {
        mu.integrate(self)
    }
}

/// `F(μ) = ψ(∫φ₁dμ, …, ∫φₙdμ)`.
pub type CylinderFunctionM = Cylinder<SmoothScalarField>;

/// `d̃_vF = F[ξ: φ₁..φₙ, d_vφ₁..d_vφₙ]`.
pub fn lifted_derivative(v: &SmoothVectorField, f: &CylinderFunctionM) -> Result<CylinderFunctionM> {
    require_liftable(v)?;
    f.lift_with(|phi| directional_derivative_scalar(v, phi))
}

/// `|(d̃_vd̃_w − d̃_wd̃_v)F(μ) − d̃_{[v,w]}F(μ)|` and the largest term.
pub fn lie_compat_residual(
    v: &SmoothVectorField,
    w: &SmoothVectorField,
    f: &CylinderFunctionM,
    mu: &ParticleMeasure,
) -> Result<(f64, f64)> {
    let vw = lifted_derivative(v, &lifted_derivative(w, f)?)?.eval(mu)?;
    let wv = lifted_derivative(w, &lifted_derivative(v, f)?)?.eval(mu)?;
    let br = lifted_derivative(&lie_bracket(v, w)?, f)?.eval(mu)?;
    Ok(((vw - wv - br).abs(), vw.abs().max(wv.abs()).max(br.abs())))
}

/// Central difference of `t ↦ F(e^{tv}_*μ)` at `t = 0`.
pub fn flow_fd_derivative(
    f: &CylinderFunctionM,
    v: &SmoothVectorField,
    mu: &ParticleMeasure,
    h: f64,
) -> Result<f64> {
    let plus = mu.pushforward(&Diffeo::Flow { field: v.clone(), t: h })?;
    let minus = mu.pushforward(&Diffeo::Flow { field: v.clone(), t: -h })?;
    Ok((f.eval(&plus)? - f.eval(&minus)?) / (2.0 * h))
}

/// `F ∘ Υ̂ = F[ψ: φᵢ∘Υ]`.
pub fn embedding_pullback(emb: &AffineEmbedding, f: &CylinderFunctionM) -> Result<CylinderFunctionM> {
    let gens = f
        .generators()
        .iter()
        .map(|phi| emb.pull_scalar(phi))
        .collect::<Result<_>>()?;
    Cylinder::new(f.psi().clone(), gens)
}

/// Residual of `d̃_{v'}(F∘Υ̂)(μ') = (d̃_vF)(Υ_*μ')` with `v` the extension of `v'`.
pub fn embedding_diff_residual(
    emb: &AffineEmbedding,
    v_src: &SmoothVectorField,
    f: &CylinderFunctionM,
    mu_src: &ParticleMeasure,
) -> Result<(f64, f64)> {
    let lhs = lifted_derivative(v_src, &embedding_pullback(emb, f)?)?.eval(mu_src)?;
    let v = emb.extend_field(v_src)?;
    let rhs = lifted_derivative(&v, f)?.eval(&mu_src.embed(emb)?)?;
    Ok(((lhs - rhs).abs(), lhs.abs().max(rhs.abs())))
}

/// `F ∘ ν̂ = F[ψ: x ↦ ∫φ(x+y)dν(y)]` where `ν̂(μ) = μ ⋆ ν`.
pub fn convolution_pullback(nu: &ParticleMeasure, f: &CylinderFunctionM) -> Result<CylinderFunctionM> {
    let m = nu.dim();
    let gens = f
        .generators()
        .iter()
        .map(|phi| {
            check_dim("convolution pullback", m, phi.dim())?;
            let mut support: Option<Ball> = None;
            let mut terms = Vec::with_capacity(nu.atoms().len());
            for (y, u) in nu.atoms() {
                let shifted: Vec<Expr> = (0..m).map(|i| Expr::var(i) + y[i]).collect();
                terms.push(phi.expr().substitute(&shifted) * *u);
                if let Some(b) = phi.support() {
                    let c: Vec<f64> = b.center.iter().zip(y).map(|(c, yi)| c - yi).collect();
                    let tb = Ball::new(c, b.radius);
                    support = Some(match support {
                        None => tb,
                        Some(s) => s.union(&tb),
                    });
                }
            }
            if phi.support().is_none() {
                support = None;
            }
            Ok(SmoothScalarField::with_support(m, Expr::sum(terms), support))
        })
        .collect::<Result<_>>()?;
    Cylinder::new(f.psi().clone(), gens)
}

/// `F ∘ f̂ = F[ψ: f·φᵢ]`.
pub fn density_pullback(density: &SmoothScalarField, f: &CylinderFunctionM) -> Result<CylinderFunctionM> {
    let gens = f
        .generators()
        .iter()
        .map(|phi| density.mul(phi))
        .collect::<Result<_>>()?;
    Cylinder::new(f.psi().clone(), gens)
}

/// Cylinder functions on particle measures over `ℝᵐ` with lifted vector fields.
#[derive(Clone, Debug)]
pub struct MeasureGeometry {
    dim: usize,
    max_atoms: usize,
    sample_radius: f64,
}

impl MeasureGeometry {
    pub fn new(dim: usize, max_atoms: usize, sample_radius: f64) -> Self {
        MeasureGeometry { dim, max_atoms: max_atoms.max(1), sample_radius }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Geometry for MeasureGeometry {
    type Point = ParticleMeasure;
    type Element = CylinderFunctionM;
    type Generator = SmoothVectorField;

    fn sample_point(&self, rng: &mut dyn RngCore) -> ParticleMeasure {
        let n = rng.random_range(1..=self.max_atoms);
        let r = self.sample_radius;
        let atoms = (0..n)
            .map(|_| {
                let x = (0..self.dim).map(|_| rng.random_range(-r..=r)).collect();
                (x, rng.random_range(0.5..2.0))
            })
            .collect();
        ParticleMeasure::new(self.dim, atoms).expect("sampled weights are positive")
    }

    fn eval(&self, a: &CylinderFunctionM, p: &ParticleMeasure) -> Result<f64> {
        a.eval(p)
    }

    fn constant(&self, c: f64) -> CylinderFunctionM {
        Cylinder::constant(c)
    }

    fn add(&self, a: &CylinderFunctionM, b: &CylinderFunctionM) -> Result<CylinderFunctionM> {
        Ok(a.add(b))
    }

    fn mul(&self, a: &CylinderFunctionM, b: &CylinderFunctionM) -> Result<CylinderFunctionM> {
        Ok(a.mul(b))
    }

    fn scale(&self, c: f64, a: &CylinderFunctionM) -> CylinderFunctionM {
        a.scale(c)
    }

    fn derive(&self, g: &SmoothVectorField, a: &CylinderFunctionM) -> Result<CylinderFunctionM> {
        lifted_derivative(g, a)
    }

    fn bracket(&self, g: &SmoothVectorField, h: &SmoothVectorField) -> Result<SmoothVectorField> {
        lie_bracket(g, h)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::error::LiftedError;
    use crate::smooth::make_bump;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn psi1(e: Expr) -> SmoothScalarField {
        SmoothScalarField::from_expr(1, e)
    }

    fn bump_field(c: &[f64], r: f64, comps: Vec<Expr>) -> SmoothVectorField {
        SmoothVectorField::masked(&make_bump(c, r).unwrap(), comps).unwrap()
    }

    #[test]
    fn eval_examples() {
        let phi = make_bump(&[0.0], 1.0).unwrap();
        let id = Cylinder::new(psi1(x(0)), vec![phi.clone()]).unwrap();
        assert_eq!(id.eval(&ParticleMeasure::dirac(vec![0.5])).unwrap(), phi.eval(&[0.5]));
        let sq = Cylinder::new(psi1(x(0).powi(2)), vec![phi]).unwrap();
        let mu = ParticleMeasure::new(1, vec![(vec![0.0], 2.0)]).unwrap();
        assert_eq!(sq.eval(&mu).unwrap(), 4.0);
        assert_eq!(sq.eval(&ParticleMeasure::zero(1)).unwrap(), 0.0);
    }

    #[test]
    fn lifted_identity_and_constant() {
        let phi = SmoothScalarField::from_expr(2, (x(0) * x(1)).sin());
        let v = bump_field(&[0.0, 0.0], 2.0, vec![x(1), Expr::constant(1.0)]);
        let f = Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![phi.clone()]).unwrap();
        let mu = ParticleMeasure::new(2, vec![(vec![0.3, 0.1], 1.5), (vec![-0.2, 0.6], 0.5)]).unwrap();
        let d = lifted_derivative(&v, &f).unwrap();
        let want = mu.integrate(&directional_derivative_scalar(&v, &phi).unwrap()).unwrap();
        assert!((d.eval(&mu).unwrap() - want).abs() < 1e-15);
        let c = Cylinder::new(SmoothScalarField::constant(1, 3.0), vec![phi]).unwrap();
        assert_eq!(lifted_derivative(&v, &c).unwrap().eval(&mu).unwrap(), 0.0);
        let nonc = SmoothVectorField::from_exprs(vec![x(0).powi(2), x(1)], None);
        assert!(matches!(lifted_derivative(&nonc, &f), Err(LiftedError::Unsupported(_))));
    }

    #[test]
    fn matches_flow_difference() {
        let phis = vec![
            make_bump(&[0.1, 0.0], 1.5).unwrap(),
            SmoothScalarField::from_expr(2, x(0) * x(1) + x(1).cos()),
        ];
        let psi = SmoothScalarField::from_expr(2, x(0) * x(1).sin() + x(0).powi(2));
        let f = Cylinder::new(psi, phis).unwrap();
        let v = bump_field(&[0.0, 0.0], 2.0, vec![x(1) + 0.5, -x(0)]);
        let mu = ParticleMeasure::new(2, vec![(vec![0.3, -0.2], 1.0), (vec![-0.4, 0.5], 0.7)]).unwrap();
        let exact = lifted_derivative(&v, &f).unwrap().eval(&mu).unwrap();
        let fd = flow_fd_derivative(&f, &v, &mu, 1e-3).unwrap();
        assert!((exact - fd).abs() < 1e-6 * (1.0 + exact.abs()), "{exact} {fd}");
    }

    #[test]
    fn lie_compatibility() {
        let f = Cylinder::new(
            SmoothScalarField::from_expr(2, (x(0) * x(1)).sin() + x(1).powi(3)),
            vec![make_bump(&[0.0, 0.0], 1.2).unwrap(), SmoothScalarField::from_expr(2, x(0).exp() * x(1))],
        )
        .unwrap();
        let v = bump_field(&[0.2, 0.0], 1.5, vec![x(1), x(0) * x(0)]);
        let w = bump_field(&[0.0, -0.1], 1.7, vec![Expr::constant(1.0), x(0).sin()]);
        let mu = ParticleMeasure::new(2, vec![(vec![0.3, 0.1], 1.0), (vec![-0.5, 0.2], 2.0)]).unwrap();
        let (r, s) = lie_compat_residual(&v, &w, &f, &mu).unwrap();
        assert!(r <= 1e-8 * s.max(1.0), "{r} {s}");
        assert_eq!(lie_compat_residual(&v, &v, &f, &mu).unwrap().0, 0.0);
        let (c1, c2) = (SmoothVectorField::constant(&[1.0, 0.0]), SmoothVectorField::constant(&[0.3, 2.0]));
        assert!(lie_compat_residual(&c1, &c2, &f, &mu).unwrap().0 <= 1e-10);
    }

    #[test]
    fn embedding_is_differentiable() {
        let emb = AffineEmbedding::coordinate_inclusion(1, 2).unwrap();
        let f = Cylinder::new(
            SmoothScalarField::from_expr(1, x(0).powi(2) + x(0)),
            vec![SmoothScalarField::from_expr(2, (x(0) + x(1)).sin() * make_bump(&[0.0, 0.0], 2.0).unwrap().expr())],
        )
        .unwrap();
        let v = bump_field(&[0.0], 1.0, vec![x(0) + 2.0]);
        let mu = ParticleMeasure::new(1, vec![(vec![0.2], 1.0), (vec![-0.4], 0.3)]).unwrap();
        let (r, s) = embedding_diff_residual(&emb, &v, &f, &mu).unwrap();
        assert!(r <= 1e-9 * s.max(1.0));
        let direct = f.eval(&mu.embed(&emb).unwrap()).unwrap();
        assert!((embedding_pullback(&emb, &f).unwrap().eval(&mu).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn algebraic_maps_rewrite() {
        let f = Cylinder::new(
            SmoothScalarField::from_expr(2, x(0) * x(1) + x(0)),
            vec![make_bump(&[0.0, 0.0], 1.5).unwrap(), SmoothScalarField::from_expr(2, x(1).cos())],
        )
        .unwrap();
        let mu = ParticleMeasure::new(2, vec![(vec![0.1, 0.3], 1.0), (vec![0.4, -0.2], 0.5)]).unwrap();
        let nu = ParticleMeasure::new(2, vec![(vec![0.2, 0.0], 2.0), (vec![-0.1, 0.1], 0.5)]).unwrap();
        let lhs = f.eval(&mu.convolve(&nu).unwrap()).unwrap();
        let rhs = convolution_pullback(&nu, &f).unwrap().eval(&mu).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let dens = SmoothScalarField::from_expr(2, x(0).powi(2) + 0.5);
        let lhs = f.eval(&mu.with_density(&dens).unwrap()).unwrap();
        let rhs = density_pullback(&dens, &f).unwrap().eval(&mu).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn geometry_sampling_is_seeded() {
        let g = MeasureGeometry::new(2, 4, 1.0);
        let a = g.sample_point(&mut ChaCha8Rng::seed_from_u64(11));
        let b = g.sample_point(&mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
        assert!((1..=4).contains(&a.atoms().len()));
    }
}
