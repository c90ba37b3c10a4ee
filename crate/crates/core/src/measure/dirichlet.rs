use crate::cylinder::Cylinder;
use crate::error::{check_dim, LiftedError, Result};
use crate::geometry::DerivationHandle;
use crate::measure::{CylinderFunctionM, MeasureGeometry, ParticleMeasure, RandomMeasure};
use crate::smooth::{metric_gradient, RiemannianMetric, SmoothScalarField, SmoothVectorField};

/// `⟨[v],[w]⟩_μ = ∫⟨v(x), w(x)⟩_g dμ(x)`.
pub fn tangent_inner_product(
    v: &SmoothVectorField,
    w: &SmoothVectorField,
    mu: &ParticleMeasure,
    g: &RiemannianMetric,
) -> Result<f64> {
    check_dim("tangent inner product", mu.dim(), v.dim())?;
    check_dim("tangent inner product", mu.dim(), w.dim())?;
    check_dim("metric", mu.dim(), g.dim())?;
    Ok(mu.integrate_fn(|x| g.inner(x, &v.eval(x), &w.eval(x))))
}

/// The representative `w^μ = Σ Fᵢ(μ) ∇_gφᵢ` of `∇F(μ)`, and the field
/// `∇F = Σ Fᵢ · (∇_gφᵢ)†` as a derivation with `Fᵢ = F[∂ψ/∂rᵢ: φ]`.
pub fn gradient(
    f: &CylinderFunctionM,
    mu: &ParticleMeasure,
    g: &RiemannianMetric,
) -> Result<(SmoothVectorField, DerivationHandle<MeasureGeometry>)> {
    check_dim("metric", mu.dim(), g.dim())?;
    let mut w = SmoothVectorField::zero(mu.dim());
    let mut terms = Vec::with_capacity(f.arity());
    for (i, phi) in f.generators().iter().enumerate() {
        let fi = f.partial(i);
        let grad = metric_gradient(phi, g)?;
        w = w.add(&grad.scale(fi.eval(mu)?))?;
        terms.push((fi, grad));
    }
    Ok((w, DerivationHandle::Combination(terms)))
}

fn require_compact(f: &CylinderFunctionM) -> Result<()> {
    if f.has_compact_psi() {
        Ok(())
    } else {
        Err(LiftedError::DomainViolation(
            "Dirichlet form needs a compactly supported outer function".into(),
        ))
    }
}

/// `𝔏(F,F') = Σⱼ pⱼ Σ_{i,i'} Fᵢ(μⱼ) F'ᵢ'(μⱼ) ∫⟨∇_gφᵢ, ∇_gφ'ᵢ'⟩_g dμⱼ`.
pub fn dirichlet_form(
    f: &CylinderFunctionM,
    f2: &CylinderFunctionM,
    theta: &RandomMeasure,
    g: &RiemannianMetric,
) -> Result<f64> {
    require_compact(f)?;
    require_compact(f2)?;
    let partials = |h: &CylinderFunctionM| -> Vec<CylinderFunctionM> {
        (0..h.arity()).map(|i| h.partial(i)).collect()
    };
    let (p1, p2) = (partials(f), partials(f2));
    let mut total = 0.0;
    for (mu, prob) in theta.members() {
        check_dim("metric", mu.dim(), g.dim())?;
        let c1 = p1.iter().map(|h| h.eval(mu)).collect::<Result<Vec<_>>>()?;
        let c2 = p2.iter().map(|h| h.eval(mu)).collect::<Result<Vec<_>>>()?;
        let mut value = 0.0;
        for (x, wt) in mu.atoms() {
            let ginv = g.inverse(x);
            // gradients combined before the bilinear form: Σᵢ Fᵢ ∇φᵢ
            let combine = |c: &[f64], gens: &[SmoothScalarField]| -> Vec<f64> {
                let mut acc = vec![0.0; x.len()];
                for (ci, phi) in c.iter().zip(gens) {
                    if *ci != 0.0 {
                        for (a, d) in acc.iter_mut().zip(phi.grad(x)) {
                            *a += ci * d;
                        }
                    }
                }
                acc
            };
            let a = combine(&c1, f.generators());
            let b = combine(&c2, f2.generators());
            let mut q = 0.0;
            for (i, ai) in a.iter().enumerate() {
                for (j, bj) in b.iter().enumerate() {
                    q += ai * ginv[i][j] * bj;
                }
            }
            value += wt * q;
        }
        total += prob * value;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug)]
pub struct MarkovReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

const CONTRACTION_SAMPLES: usize = 2001;

/// Compares `𝔏(ε∘F, ε∘F)` with `𝔏(F, F)` for a unit contraction `ε`.
pub fn markov_check(
    f: &CylinderFunctionM,
    eps: &SmoothScalarField,
    theta: &RandomMeasure,
    g: &RiemannianMetric,
) -> Result<MarkovReport> {
    check_dim("contraction", 1, eps.dim())?;
    if eps.eval(&[0.0]).abs() > 1e-12 {
        return Err(LiftedError::DomainViolation("contraction must satisfy ε(0) = 0".into()));
    }
    for k in 0..CONTRACTION_SAMPLES {
        let s = -10.0 + 20.0 * k as f64 / (CONTRACTION_SAMPLES - 1) as f64;
        let slope = eps.grad(&[s])[0];
        if !(slope.abs() <= 1.0 + 1e-12) {
            return Err(LiftedError::DomainViolation(format!(
                "contraction slope {slope} exceeds 1 at {s}"
            )));
        }
    }
    let composed: Cylinder<_> = f.compose_outer(eps)?;
    let lhs = dirichlet_form(&composed, &composed, theta, g)?;
    let rhs = dirichlet_form(f, f, theta, g)?;
    Ok(MarkovReport { lhs, rhs, pass: lhs <= rhs + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::measure::lifted_derivative;
    use crate::smooth::make_bump;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    /// `r · b(r/R)`: equal to the identity to high order near 0, compactly supported.
    fn compact_identity(radius: f64) -> SmoothScalarField {
        let b = make_bump(&[0.0], radius).unwrap();
        SmoothScalarField::with_support(1, x(0) * b.expr(), b.support().cloned())
    }

    fn theta() -> RandomMeasure {
        RandomMeasure::new(vec![
            (ParticleMeasure::new(2, vec![(vec![0.2, 0.1], 1.0), (vec![-0.3, 0.4], 0.5)]).unwrap(), 0.25),
            (ParticleMeasure::dirac(vec![0.5, -0.5]), 0.75),
        ])
        .unwrap()
    }

    fn func() -> CylinderFunctionM {
        let b = make_bump(&[0.0, 0.0], 3.0).unwrap();
        let psi = SmoothScalarField::with_support(
            2,
            (x(0) * 2.0 + x(1)).sin() * make_bump(&[0.0, 0.0], 4.0).unwrap().expr(),
            Some(crate::smooth::Ball::new(vec![0.0, 0.0], 4.0)),
        );
        let prod = make_bump(&[0.0, 0.5], 2.5).unwrap().mul(&SmoothScalarField::from_expr(2, x(0) * x(1))).unwrap();
        Cylinder::new(psi, vec![b, prod]).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let v = SmoothVectorField::from_exprs(vec![x(0), Expr::constant(1.0)], None);
        let w = SmoothVectorField::from_exprs(vec![Expr::constant(2.0), x(1)], None);
        let g = RiemannianMetric::euclidean(2);
        let d = ParticleMeasure::dirac(vec![0.5, 3.0]);
        assert_eq!(tangent_inner_product(&v, &w, &d, &g).unwrap(), 4.0);
        let mu = theta().members()[0].0.clone();
        let a = tangent_inner_product(&v, &w, &mu, &g).unwrap();
        let b = tangent_inner_product(&v, &w, &mu.scaled(3.0).unwrap(), &g).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-14);
        assert!(tangent_inner_product(&v, &v, &mu, &g).unwrap() >= 0.0);
    }

    #[test]
    fn gradient_duality() {
        let f = func();
        let g = RiemannianMetric::diagonal(&[2.0, 0.5]).unwrap();
        let mu = theta().members()[0].0.clone();
        let (w, handle) = gradient(&f, &mu, &g).unwrap();
        let vs = [
            SmoothVectorField::constant(&[1.0, -2.0]),
            SmoothVectorField::masked(&make_bump(&[0.0, 0.0], 2.0).unwrap(), vec![x(1), x(0).sin()]).unwrap(),
        ];
        for v in &vs {
            let lhs = tangent_inner_product(v, &w, &mu, &g).unwrap();
            let rhs = lifted_derivative(v, &f).unwrap().eval(&mu).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
        let geom = MeasureGeometry::new(2, 3, 1.0);
        let probe = Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![make_bump(&[0.1, 0.0], 2.0).unwrap()]).unwrap();
        let hv = handle.apply_at(&geom, &probe, &mu).unwrap();
        let phi = &probe.generators()[0];
        let direct = tangent_inner_product(&metric_gradient(phi, &g).unwrap(), &w, &mu, &g).unwrap();
        assert!((hv - direct).abs() < 1e-12);
        let constant = Cylinder::constant(2.0);
        let (z, _) = gradient(&constant, &mu, &g).unwrap();
        assert_eq!(z.eval(&[0.3, 0.3]), vec![0.0, 0.0]);
    }

    #[test]
    fn dirichlet_single_atom_and_symmetry() {
        let phi = SmoothScalarField::from_expr(1, x(0).sin());
        let psi = compact_identity(5.0);
        let f = Cylinder::new(psi.clone(), vec![phi.clone()]).unwrap();
        let at = 0.4;
        let th = RandomMeasure::new(vec![(ParticleMeasure::dirac(vec![at]), 1.0)]).unwrap();
        let g = RiemannianMetric::euclidean(1);
        let want = phi.grad(&[at])[0].powi(2) * psi.grad(&[phi.eval(&[at])])[0].powi(2);
        assert!((dirichlet_form(&f, &f, &th, &g).unwrap() - want).abs() < 1e-14);
        let f2 = func();
        let th = theta();
        let g = RiemannianMetric::euclidean(2);
        let h = Cylinder::new(compact_identity(3.0), vec![make_bump(&[0.2, 0.0], 1.0).unwrap()]).unwrap();
        let a = dirichlet_form(&f2, &h, &th, &g).unwrap();
        let b = dirichlet_form(&h, &f2, &th, &g).unwrap();
        assert!((a - b).abs() < 1e-12);
        let noncompact = Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![phi]).unwrap();
        assert!(matches!(
            dirichlet_form(&noncompact, &noncompact, &th, &RiemannianMetric::euclidean(1)),
            Err(LiftedError::DomainViolation(_))
        ));
    }

    #[test]
    fn markov_examples() {
        let f = func();
        let th = theta();
        let g = RiemannianMetric::euclidean(2);
        let tanh = SmoothScalarField::from_expr(1, x(0).tanh());
        let rep = markov_check(&f, &tanh, &th, &g).unwrap();
        assert!(rep.pass && rep.lhs <= rep.rhs);
        let id = SmoothScalarField::from_expr(1, x(0));
        let rep = markov_check(&f, &id, &th, &g).unwrap();
        assert!((rep.lhs - rep.rhs).abs() < 1e-12);
        let zero = SmoothScalarField::constant(1, 0.0);
        assert_eq!(markov_check(&f, &zero, &th, &g).unwrap().lhs, 0.0);
        let steep = SmoothScalarField::from_expr(1, x(0) * 2.0);
        assert!(matches!(markov_check(&f, &steep, &th, &g), Err(LiftedError::DomainViolation(_))));
        let shifted = SmoothScalarField::from_expr(1, x(0).tanh() + 0.1);
        assert!(matches!(markov_check(&f, &shifted, &th, &g), Err(LiftedError::DomainViolation(_))));
    }
}
