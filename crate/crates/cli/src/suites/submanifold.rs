use lifted_core::cylinder::Cylinder;
use lifted_core::smooth::{make_bump, FormOnX, SmoothScalarField, SmoothVectorField};
use lifted_core::submanifold::meshes::{disk, triangle, unit_square};
use lifted_core::submanifold::{
    boundary_weak_diff_check, flow_fd_derivative, integrate_form, lie_compat_residual, lifted_derivative,
    stokes_check, stokes_refinement_study, CylinderFunctionSub, SimplicialManifold, SubmanifoldGeometry,
};
use lifted_core::{Expr, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{leibniz, linearity, Sampled};
use crate::config::Params;
use crate::gen::{self, point, smooth_expr, x};
use crate::harness::{rel_scale, Group, Outcome};
use crate::suites::measure::FD_STEP;

/// Centre of the refinement band `[2.6, 6]` for the error-reduction ratio.
pub const RATIO_CENTER: f64 = 4.3;
pub const RATIO_HALF_WIDTH: f64 = 1.7;

impl Sampled for SubmanifoldGeometry {
    fn base_dim(&self) -> usize {
        self.base().ambient_dim()
    }

    /// `ψ(∫ω₁, …)` with one or two bump-supported forms of the base degree.
    fn element(&self, rng: &mut ChaCha8Rng) -> CylinderFunctionSub {
        let n = rng.random_range(1..=2);
        let forms = (0..n).map(|_| gen::bump_one_form(&point(2, 0.5, rng), 2.5, rng)).collect();
        Cylinder::new(SmoothScalarField::from_expr(n, smooth_expr(n, rng)), forms).expect("arity matches")
    }
}

const STOKES: &str = "By Stokes' Theorem we have";
const WEAK: &str = "∂ is weakly differentiable";

pub fn groups() -> Vec<Group> {
    vec![
        Group {
            name: "stokes-exact-square",
            desc: "F(∂E) = F[ψ: dω](E) on the unit square, exact quadrature",
            anchor: STOKES,
            count: 10,
            tolerance: 1e-12,
            run: |rng, _| stokes_exact(&unit_square(rng.random_range(1..=4))?, rng),
        },
        Group {
            name: "stokes-exact-triangle",
            desc: "F(∂E) = F[ψ: dω](E) on the unit triangle, exact quadrature",
            anchor: STOKES,
            count: 10,
            tolerance: 1e-12,
            run: |rng, _| stokes_exact(&triangle(rng.random_range(1..=4))?, rng),
        },
        Group {
            name: "stokes-exact-disk",
            desc: "F(∂E) = F[ψ: dω](E) on polygonal disks, exact quadrature",
            anchor: STOKES,
            count: 10,
            tolerance: 1e-12,
            run: |rng, _| stokes_exact(&disk(rng.random_range(1..=4), rng.random_range(0.5..1.5))?, rng),
        },
        Group {
            name: "stokes-refinement",
            desc: "∫dω over disk meshes against ∮ω on the circle; residual is max |ratio − 4.3| over halvings",
            anchor: STOKES,
            count: 1,
            tolerance: RATIO_HALF_WIDTH,
            run: refinement,
        },
        Group {
            name: "weak-diff-exact",
            desc: "d̃_v(F∘∂) = (d̃_vF)∘∂ for affine v and polynomial forms",
            anchor: WEAK,
            count: 30,
            tolerance: 1e-10,
            run: weak_diff_exact,
        },
        Group {
            name: "weak-diff-quadrature",
            desc: "d̃_v(F∘∂) = (d̃_vF)∘∂ for bump fields and forms on a fine square mesh",
            anchor: WEAK,
            count: 5,
            tolerance: 1e-6,
            run: weak_diff_quadrature,
        },
        Group {
            name: "flow-oracle",
            desc: "lifted derivative against central difference of F along vertex flow on a polygon",
            anchor: "if ξ:R^{2n}→R is defined by",
            count: 10,
            tolerance: 1e-4,
            run: flow_oracle,
        },
        Group {
            name: "lie-compat",
            desc: "(d̃_vd̃_w − d̃_wd̃_v)F = d̃_{[v,w]}F on closed polygons",
            anchor: "we have showed that any function",
            count: 50,
            tolerance: 1e-8,
            run: lie_compat,
        },
        Group {
            name: "leibniz",
            desc: "Leibniz rule for basic and combined derivations on submanifold functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, _| Ok(Outcome::Residual(leibniz(&geometry()?, rng)?)),
        },
        Group {
            name: "linearity",
            desc: "d̃_{sv+tw}F = s·d̃_vF + t·d̃_wF on submanifold functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, _| Ok(Outcome::Residual(linearity(&geometry()?, rng)?)),
        },
        Group {
            name: "orientation",
            desc: "∫ω over the reversed mesh is −∫ω for polynomial 2-forms",
            anchor: "oriented compact submanifolds with boundary",
            count: 10,
            tolerance: 1e-12,
            run: orientation,
        },
    ]
}

fn geometry() -> Result<SubmanifoldGeometry> {
    Ok(SubmanifoldGeometry::new(disk(3, 1.0)?.boundary()?, 0.1))
}

fn poly_function(n: usize, rng: &mut ChaCha8Rng) -> SmoothScalarField {
    SmoothScalarField::from_expr(n, gen::poly_expr(n, 2, rng))
}

fn stokes_exact(e: &SimplicialManifold, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let n = rng.random_range(1..=2);
    let forms = (0..n).map(|_| gen::poly_one_form(rng.random_range(1..=4), rng)).collect();
    let f = Cylinder::new(SmoothScalarField::from_expr(n, smooth_expr(n, rng)), forms)?;
    let r = stokes_check(&f, e)?;
    Ok(Outcome::Residual(rel_scale(r.residual, r.scale())))
}

/// The fixed refinement form: `b·(−y dx + x dy)` with a bump crossing the circle.
pub fn refinement_form() -> Result<FormOnX> {
    let b = make_bump(&[0.9, 0.2], 0.7)?;
    FormOnX::new(2, 1, vec![(vec![0], -x(1) * b.expr()), (vec![1], x(0) * b.expr())], b.support().cloned())
}

pub fn refinement_levels(refine: usize) -> Vec<usize> {
    (0..refine).map(|i| 4 << i).collect()
}

fn refinement(_: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let rows = stokes_refinement_study(&refinement_form()?, 1.0, &refinement_levels(p.refine))?;
    if rows.len() < 2 {
        return Ok(Outcome::Skip("needs at least two refinement levels".into()));
    }
    let worst = rows.iter().filter_map(|r| r.ratio).map(|q| (q - RATIO_CENTER).abs()).fold(0.0, f64::max);
    Ok(Outcome::Residual(worst))
}

fn weak_diff_exact(rng: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    let v = gen::affine_field(2, rng);
    let n = rng.random_range(1..=2);
    let forms = (0..n).map(|_| gen::poly_one_form(rng.random_range(1..=3), rng)).collect();
    let f = Cylinder::new(poly_function(n, rng), forms)?;
    let e = if rng.random_bool(0.5) { unit_square(rng.random_range(1..=3))? } else { triangle(rng.random_range(1..=3))? };
    let r = boundary_weak_diff_check(&v, &f, &e)?;
    Ok(Outcome::Residual(rel_scale(r.residual, r.scale())))
}

fn weak_diff_quadrature(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let b = make_bump(&point(2, 0.3, rng), 2.0)?;
    let v = SmoothVectorField::masked(&b, vec![smooth_expr(2, rng), smooth_expr(2, rng)])?;
    let omega = gen::bump_one_form(&[0.5, 0.5], 1.5, rng);
    let f = Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![omega])?;
    let r = boundary_weak_diff_check(&v, &f, &unit_square(p.mesh)?)?;
    Ok(Outcome::Residual(rel_scale(r.residual, r.scale())))
}

fn flow_oracle(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let e = unit_square(p.mesh)?.boundary()?;
    let b = make_bump(&point(2, 0.3, rng), 2.5)?;
    let omega = FormOnX::new(
        2,
        1,
        vec![(vec![0], smooth_expr(2, rng) * b.expr()), (vec![1], smooth_expr(2, rng) * b.expr())],
        b.support().cloned(),
    )?;
    let f = Cylinder::new(SmoothScalarField::from_expr(1, smooth_expr(1, rng)), vec![omega])?;
    // gentle field: PL deformation of the polygon stays first-order accurate
    let wide = make_bump(&[0.5, 0.5], 4.0)?;
    let a = point(4, 1.0, rng);
    let v = SmoothVectorField::masked(&wide, vec![x(0) * a[0] + x(1) * a[1], x(1) * a[2] + Expr::constant(a[3])])?;
    let formula = lifted_derivative(&v, &f)?.eval(&e)?;
    let fd = flow_fd_derivative(&f, &v, &e, FD_STEP)?;
    Ok(Outcome::Residual((formula - fd).abs() / (1.0 + formula.abs())))
}

fn lie_compat(rng: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    use lifted_core::geometry::Geometry;
    let geom = geometry()?;
    let f = geom.element(rng);
    let (v, w) = (geom.field(rng), geom.field(rng));
    let e = geom.sample_point(rng);
    let (res, scale) = lie_compat_residual(&v, &w, &f, &e)?;
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

fn orientation(rng: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    let e = match rng.random_range(0..3) {
        0 => unit_square(3)?,
        1 => triangle(3)?,
        _ => disk(2, 1.0)?,
    };
    // polynomial coefficients: reversing a cell reorders the collapsed rule's nodes,
    // so only the exact path is orientation-symmetric to rounding
    let omega = FormOnX::new(2, 2, vec![(vec![0, 1], gen::poly_expr(2, rng.random_range(0..=4), rng))], None)?;
    let fwd = integrate_form(&omega, &e)?;
    let back = integrate_form(&omega, &e.reversed())?;
    Ok(Outcome::Residual(rel_scale((fwd + back).abs(), fwd.abs())))
}
