use rand::{Rng, RngCore};

use crate::cylinder::{require_liftable, Cylinder, Generator};
use crate::error::{check_dim, invalid, Result};
use crate::geometry::Geometry;
use crate::quadrature::{composite, exact_order, simplex_rule};
use crate::smooth::field::dist;
use crate::smooth::form::determinant;
use crate::smooth::{lie_bracket, FormOnX, SmoothVectorField};
use crate::submanifold::SimplicialManifold;

/// Quadrature order for non-polynomial coefficients.
const QUAD_ORDER: usize = 7;

impl Generator for FormOnX {
    type Point = SimplicialManifold;

    fn pair(&self, e: &SimplicialManifold) -> Result<f64> {
        integrate_form(self, e)
    }
}

/// `F(E) = ψ(∫_E ω₁, …, ∫_E ωₙ)`.
pub type CylinderFunctionSub = Cylinder<FormOnX>;

/// `∫_E ω` with an error estimate; `exact` marks the polynomial path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub exact: bool,
}

pub fn integrate_form(omega: &FormOnX, e: &SimplicialManifold) -> Result<f64> {
    Ok(integrate(omega, e, false)?.value)
}

/// As [`integrate_form`], estimating the quadrature error by comparing order
/// 7 against order 9.
pub fn integrate_form_detailed(omega: &FormOnX, e: &SimplicialManifold) -> Result<Integral> {
    integrate(omega, e, true)
}

fn integrate(omega: &FormOnX, e: &SimplicialManifold, estimate: bool) -> Result<Integral> {
    if omega.degree() != e.dim() {
        return Err(invalid(format!(
            "cannot integrate a {}-form over a {}-manifold",
            omega.degree(),
            e.dim()
        )));
    }
    check_dim("form ambient dimension", e.ambient_dim(), omega.dim())?;
    let k = e.dim();
    if k == 0 {
        let value = e
            .cells()
            .iter()
            .zip(e.signs())
            .map(|(c, s)| s * omega.eval_unchecked(&e.vertices()[c[0]], &[]))
            .sum();
        return Ok(Integral { value, error: 0.0, exact: true });
    }
    match omega.polynomial_degree() {
        Some(p) => {
            let value = integrate_with(omega, e, exact_order(k, p as usize));
            Ok(Integral { value, error: 0.0, exact: true })
        }
        None => {
            let value = integrate_with(omega, e, QUAD_ORDER);
            let error = if estimate { (integrate_with(omega, e, QUAD_ORDER + 2) - value).abs() } else { f64::NAN };
            Ok(Integral { value, error, exact: false })
        }
    }
}

/// `Σ_cells ∫_Δ ω(x(t))(e₁..e_k) dt` with `x(t) = v₀ + Σ tⱼeⱼ`.
fn integrate_with(omega: &FormOnX, e: &SimplicialManifold, q: usize) -> f64 {
    let (idx, tape) = omega.compiled();
    if idx.is_empty() {
        return 0.0;
    }
    let k = e.dim();
    let rule = simplex_rule(k, q);
    let verts = e.vertices();
    let mut total = 0.0;
    let mut x = vec![0.0; e.ambient_dim()];
    for c in e.cells() {
        let p0 = &verts[c[0]];
        let edges: Vec<Vec<f64>> = c[1..]
            .iter()
            .map(|&i| verts[i].iter().zip(p0).map(|(a, b)| a - b).collect())
            .collect();
        if let Some(b) = omega.support() {
            let reach = c.iter().map(|&i| dist(&verts[i], p0)).fold(0.0, f64::max);
            if dist(p0, &b.center) > b.radius + reach {
                continue;
            }
        }
        let minors: Vec<f64> = idx
            .iter()
            .map(|rows| determinant(k, |r, j| edges[j][rows[r]]))
            .collect();
        let mut cell = 0.0;
        for (t, w) in &rule {
            for (d, xd) in x.iter_mut().enumerate() {
                *xd = p0[d] + t.iter().zip(&edges).map(|(tj, ej)| tj * ej[d]).sum::<f64>();
            }
            let a = tape.eval(&x);
            cell += w * a.iter().zip(&minors).map(|(a, m)| a * m).sum::<f64>();
        }
        total += cell;
    }
    total
}

/// `d̃_vF = F[ξ: ω₁..ωₙ, d_vω₁..d_vωₙ]` with `d_v` the Lie derivative of forms.
pub fn lifted_derivative(v: &SmoothVectorField, f: &CylinderFunctionSub) -> Result<CylinderFunctionSub> {
    require_liftable(v)?;
    f.lift_with(|omega| omega.lie_derivative(v))
}

/// `|(d̃_vd̃_w − d̃_wd̃_v)F(E) − d̃_{[v,w]}F(E)|` and the largest term.
pub fn lie_compat_residual(
    v: &SmoothVectorField,
    w: &SmoothVectorField,
    f: &CylinderFunctionSub,
    e: &SimplicialManifold,
) -> Result<(f64, f64)> {
    let vw = lifted_derivative(v, &lifted_derivative(w, f)?)?.eval(e)?;
    let wv = lifted_derivative(w, &lifted_derivative(v, f)?)?.eval(e)?;
    let br = lifted_derivative(&lie_bracket(v, w)?, f)?.eval(e)?;
    Ok(((vw - wv - br).abs(), vw.abs().max(wv.abs()).max(br.abs())))
}

/// Central difference of `t ↦ F(e^{tv}(E))` at `t = 0`, flowing vertices.
pub fn flow_fd_derivative(
    f: &CylinderFunctionSub,
    v: &SmoothVectorField,
    e: &SimplicialManifold,
    h: f64,
) -> Result<f64> {
    Ok((f.eval(&e.deform(v, h)?)? - f.eval(&e.deform(v, -h)?)?) / (2.0 * h))
}

/// Both sides of an identity that should agree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl StokesReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        StokesReport { lhs, rhs, residual: (lhs - rhs).abs() }
    }

    pub fn scale(&self) -> f64 {
        self.lhs.abs().max(self.rhs.abs())
    }
}

/// `F[ψ: ω](∂E)` against `F[ψ: dω](E)`.
pub fn stokes_check(f: &CylinderFunctionSub, e: &SimplicialManifold) -> Result<StokesReport> {
    let lhs = f.eval(&e.boundary()?)?;
    let rhs = f.map_generators(|omega| omega.exterior_d())?.eval(e)?;
    Ok(StokesReport::new(lhs, rhs))
}

/// `d̃_v(F∘∂)(E)` computed as `F[ξ: dω, d_v dω](E)`, against
/// `(d̃_vF)(∂E) = F[ξ: ω, d_vω](∂E)`.
pub fn boundary_weak_diff_check(
    v: &SmoothVectorField,
    f: &CylinderFunctionSub,
    e: &SimplicialManifold,
) -> Result<StokesReport> {
    let f_on_e = f.map_generators(|omega| omega.exterior_d())?;
    let lhs = lifted_derivative(v, &f_on_e)?.eval(e)?;
    let rhs = lifted_derivative(v, f)?.eval(&e.boundary()?)?;
    Ok(StokesReport::new(lhs, rhs))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinementRow {
    /// Number of rings of the disk mesh.
    pub level: usize,
    pub h: f64,
    pub residual: f64,
    /// `previous residual / residual`; absent on the first row.
    pub ratio: Option<f64>,
}

/// `∮ ω` over the smooth circle of radius `r`, counter-clockwise.
fn circle_integral(omega: &FormOnX, r: f64) -> f64 {
    composite(0.0, 2.0 * std::f64::consts::PI, 16, 32)
        .into_iter()
        .map(|(s, w)| {
            let x = [r * s.cos(), r * s.sin()];
            let dx = vec![-r * s.sin(), r * s.cos()];
            w * omega.eval_unchecked(&x, &[dx])
        })
        .sum()
}

/// `|∫_{E_n} dω − ∮_{S_r} ω|` on disk meshes with `n` rings for each level.
/// The polygonal boundary sits inside the circle at distance `O(h²)`.
pub fn stokes_refinement_study(omega: &FormOnX, radius: f64, levels: &[usize]) -> Result<Vec<RefinementRow>> {
    if omega.dim() != 2 || omega.degree() != 1 {
        return Err(invalid("refinement study needs a 1-form on R^2"));
    }
    let d_omega = omega.exterior_d()?;
    let reference = circle_integral(omega, radius);
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(levels.len());
    for &n in levels {
        let mesh = super::meshes::disk(n, radius)?;
        let residual = (integrate_form(&d_omega, &mesh)? - reference).abs();
        let ratio = rows.last().map(|p| p.residual / residual);
        rows.push(RefinementRow { level: n, h: mesh.mesh_size(), residual, ratio });
    }
    Ok(rows)
}

/// Functionals on a family of meshes obtained from a base mesh by small
/// random affine maps.
#[derive(Clone, Debug)]
pub struct SubmanifoldGeometry {
    base: SimplicialManifold,
    jitter: f64,
}

impl SubmanifoldGeometry {
    pub fn new(base: SimplicialManifold, jitter: f64) -> Self {
        SubmanifoldGeometry { base, jitter }
    }

    pub fn base(&self) -> &SimplicialManifold {
        &self.base
    }
}

impl Geometry for SubmanifoldGeometry {
    type Point = SimplicialManifold;
    type Element = CylinderFunctionSub;
    type Generator = SmoothVectorField;

    fn sample_point(&self, rng: &mut dyn RngCore) -> SimplicialManifold {
        let m = self.base.ambient_dim();
        let j = self.jitter;
        let a: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|c| f64::from(u8::from(i == c)) + rng.random_range(-j..=j))
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-j..=j)).collect();
        self.base
            .map_vertices(|x| {
                (0..m)
                    .map(|i| b[i] + a[i].iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>())
                    .collect()
            })
            .expect("an affine image keeps the mesh valid")
    }

    fn eval(&self, a: &CylinderFunctionSub, p: &SimplicialManifold) -> Result<f64> {
        a.eval(p)
    }

    fn constant(&self, c: f64) -> CylinderFunctionSub {
        Cylinder::constant(c)
    }

    fn add(&self, a: &CylinderFunctionSub, b: &CylinderFunctionSub) -> Result<CylinderFunctionSub> {
        Ok(a.add(b))
    }

    fn mul(&self, a: &CylinderFunctionSub, b: &CylinderFunctionSub) -> Result<CylinderFunctionSub> {
        Ok(a.mul(b))
    }

    fn scale(&self, c: f64, a: &CylinderFunctionSub) -> CylinderFunctionSub {
        a.scale(c)
    }

    fn derive(&self, g: &SmoothVectorField, a: &CylinderFunctionSub) -> Result<CylinderFunctionSub> {
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
    use crate::expr::Expr;
    use crate::smooth::{make_bump, SmoothScalarField};
    use crate::submanifold::meshes::{disk, loop_mesh, sphere, triangle, unit_square};

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn form(degree: usize, terms: Vec<(Vec<usize>, Expr)>) -> FormOnX {
        FormOnX::new(2, degree, terms, None).unwrap()
    }

    fn id1() -> SmoothScalarField {
        SmoothScalarField::from_expr(1, x(0))
    }

    fn single(omega: FormOnX) -> CylinderFunctionSub {
        Cylinder::new(id1(), vec![omega]).unwrap()
    }

    fn bump_form(center: &[f64], r: f64, terms: Vec<(Vec<usize>, Expr)>) -> FormOnX {
        let b = make_bump(center, r).unwrap();
        let terms = terms.into_iter().map(|(i, e)| (i, e * b.expr())).collect();
        FormOnX::new(2, 1, terms, b.support().cloned()).unwrap()
    }

    fn bump_field(center: &[f64], r: f64, comps: Vec<Expr>) -> SmoothVectorField {
        SmoothVectorField::masked(&make_bump(center, r).unwrap(), comps).unwrap()
    }

    #[test]
    fn area_and_orientation() {
        let area = form(2, vec![(vec![0, 1], Expr::constant(1.0))]);
        let sq = unit_square(4).unwrap();
        let i = integrate_form_detailed(&area, &sq).unwrap();
        assert!(i.exact);
        assert!((i.value - 1.0).abs() < 1e-14);
        assert!((integrate_form(&area, &sq.reversed()).unwrap() + 1.0).abs() < 1e-14);
        let sq_f = Cylinder::new(SmoothScalarField::from_expr(1, x(0) * x(0)), vec![area.clone()]).unwrap();
        assert!((sq_f.eval(&sq).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            integrate_form(&area, &sq.boundary().unwrap()),
            Err(LiftedError::InvalidArgument(_))
        ));
    }

    #[test]
    fn green_on_square_boundary() {
        let omega = form(1, vec![(vec![1], x(0))]);
        let b = unit_square(3).unwrap().boundary().unwrap();
        assert!((integrate_form(&omega, &b).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_forms_use_signed_points() {
        let f = FormOnX::function(&SmoothScalarField::from_expr(2, x(0) * x(0) + x(1)));
        let seg = SimplicialManifold::new(1, 2, vec![vec![0.0, 0.0], vec![2.0, 1.0]], vec![vec![0, 1]]).unwrap();
        let df = f.exterior_d().unwrap();
        let expected = 5.0;
        assert!((integrate_form(&df, &seg).unwrap() - expected).abs() < 1e-13);
        assert!((integrate_form(&f, &seg.boundary().unwrap()).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn stokes_polynomial_exact() {
        let polys = [
            x(0),
            x(0) * x(1) * x(1),
            x(0).powi(3) - x(1) * 2.0,
            x(0).powi(2) * x(1).powi(2) + x(1).powi(3) * 0.5,
        ];
        let meshes = [unit_square(3).unwrap(), triangle(4).unwrap(), disk(3, 1.3).unwrap()];
        for p in &polys {
            let omega = form(1, vec![(vec![0], p.clone() * x(1)), (vec![1], p.clone())]);
            for e in &meshes {
                let r = stokes_check(&single(omega.clone()), e).unwrap();
                assert!(r.residual <= 1e-12, "{r:?}");
            }
        }
    }

    #[test]
    fn closed_manifold_sees_psi_at_zero() {
        let psi = SmoothScalarField::from_expr(1, (x(0) + 2.0).exp());
        let omega = FormOnX::new(3, 1, vec![(vec![0], x(1) * x(2)), (vec![2], x(0))], None).unwrap();
        let f = Cylinder::new(psi, vec![omega]).unwrap();
        let s = sphere(2, 1.0).unwrap();
        let loop_pts = loop_mesh(7, 1.0).unwrap();
        assert!(loop_pts.boundary().unwrap().is_empty());
        let r = stokes_check(&f, &s).unwrap();
        assert!((r.lhs - 2f64.exp()).abs() < 1e-14);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn volume_form_counts_positive_cells() {
        let area = form(2, vec![(vec![0, 1], Expr::constant(1.0))]);
        let d = disk(5, 1.0).unwrap();
        let total: f64 = d.cell_volumes().iter().sum();
        assert!((integrate_form(&area, &d).unwrap() - total).abs() < 1e-13);
    }

    #[test]
    fn lifted_derivative_vanishing_cases() {
        let area = form(2, vec![(vec![0, 1], Expr::constant(1.0))]);
        let sq = unit_square(2).unwrap();
        let t = SmoothVectorField::constant(&[0.3, -1.2]);
        let d = lifted_derivative(&t, &single(area)).unwrap();
        assert!(d.eval(&sq).unwrap().abs() < 1e-14);
        let c: CylinderFunctionSub = Cylinder::constant(4.0);
        assert_eq!(lifted_derivative(&t, &c).unwrap().eval(&sq).unwrap(), 0.0);
        let nope = SmoothVectorField::from_exprs(vec![x(0) * x(0), x(1)], None);
        assert!(matches!(lifted_derivative(&nope, &c), Err(LiftedError::Unsupported(_))));
    }

    #[test]
    fn lifted_derivative_matches_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sq = unit_square(32).unwrap();
        for _ in 0..3 {
            let c = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
            let omega = bump_form(&c, 2.0, vec![(vec![0], x(1) * x(1)), (vec![1], x(0) + 0.5)]);
            let area = FormOnX::new(2, 2, vec![(vec![0, 1], (x(0) * x(1)).sin() + 1.0)], None).unwrap();
            let psi = SmoothScalarField::from_expr(2, (x(0) * 0.5).sin() + x(1) * x(0));
            let b = sq.boundary().unwrap();
            let f1 = single(omega);
            let v = bump_field(&[0.5, 0.5], 4.0, vec![x(1) + 0.3, x(0) * -0.5 - 0.2]);
            let formula = lifted_derivative(&v, &f1).unwrap().eval(&b).unwrap();
            let fd = flow_fd_derivative(&f1, &v, &b, 1e-3).unwrap();
            assert!((formula - fd).abs() < 1e-4 * (1.0 + formula.abs()), "{formula} {fd}");
            let f2 = Cylinder::new(psi, vec![area.clone(), area.scale(0.5)]).unwrap();
            let formula = lifted_derivative(&v, &f2).unwrap().eval(&sq).unwrap();
            let fd = flow_fd_derivative(&f2, &v, &sq, 1e-3).unwrap();
            assert!((formula - fd).abs() < 1e-4 * (1.0 + formula.abs()), "{formula} {fd}");
        }
    }

    #[test]
    fn lie_compatibility() {
        let omega = form(1, vec![(vec![0], x(0) * x(1)), (vec![1], x(0).sin())]);
        let f = Cylinder::new(SmoothScalarField::from_expr(1, x(0).exp()), vec![omega]).unwrap();
        let v = bump_field(&[0.0, 0.0], 3.0, vec![x(1), Expr::constant(1.0)]);
        let w = SmoothVectorField::linear(&[vec![0.0, 1.0], vec![-1.0, 0.3]], &[0.1, 0.0]).unwrap();
        let e = disk(4, 1.0).unwrap().boundary().unwrap();
        let (res, scale) = lie_compat_residual(&v, &w, &f, &e).unwrap();
        assert!(res <= 1e-8 * scale.max(1.0), "{res} {scale}");
    }

    #[test]
    fn boundary_weak_differentiability() {
        let a = SmoothVectorField::linear(&[vec![0.2, 1.0], vec![-0.5, 0.1]], &[0.3, -0.2]).unwrap();
        let omega = form(1, vec![(vec![0], x(0) * x(1) * x(1)), (vec![1], x(0).powi(3) + x(1))]);
        let psi = SmoothScalarField::from_expr(2, x(0) * x(1) + x(0) * x(0));
        let f = Cylinder::new(psi, vec![omega.clone(), omega.scale(-2.0)]).unwrap();
        for e in [unit_square(3).unwrap(), triangle(2).unwrap()] {
            let r = boundary_weak_diff_check(&a, &f, &e).unwrap();
            assert!(r.residual <= 1e-10 * r.scale().max(1.0), "{r:?}");
        }
        let t = SmoothVectorField::constant(&[1.0, 2.0]);
        let flat = form(1, vec![(vec![0], Expr::constant(2.0)), (vec![1], Expr::constant(-1.0))]);
        let r = boundary_weak_diff_check(&t, &single(flat), &unit_square(2).unwrap()).unwrap();
        assert!(r.lhs.abs() < 1e-14 && r.rhs.abs() < 1e-14);
        let v = bump_field(&[0.4, 0.6], 2.0, vec![x(1), -x(0)]);
        let wiggle = bump_form(&[0.5, 0.5], 1.5, vec![(vec![0], x(1).sin()), (vec![1], x(0) * x(1))]);
        let r = boundary_weak_diff_check(&v, &single(wiggle), &unit_square(32).unwrap()).unwrap();
        assert!(r.residual <= 1e-6, "{r:?}");
    }

    #[test]
    fn refinement_is_second_order() {
        let omega = bump_form(&[0.9, 0.2], 0.7, vec![(vec![0], -x(1)), (vec![1], x(0))]);
        let rows = stokes_refinement_study(&omega, 1.0, &[4, 8, 16, 32]).unwrap();
        for r in &rows[1..] {
            let q = r.ratio.unwrap();
            assert!((2.6..=6.0).contains(&q), "{rows:?}");
        }
    }

    #[test]
    fn quadrature_error_estimate_is_small() {
        let omega = bump_form(&[0.5, 0.5], 0.45, vec![(vec![0], x(1)), (vec![1], Expr::constant(1.0))]);
        let d = omega.exterior_d().unwrap();
        let i = integrate_form_detailed(&d, &unit_square(16).unwrap()).unwrap();
        assert!(!i.exact);
        assert!(i.error < 1e-6);
        // the support lies inside the square: ∫dω = ∮ω = 0
        assert!(i.value.abs() < 1e-6, "{i:?}");
    }
}
