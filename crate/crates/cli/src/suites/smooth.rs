use lifted_core::quadrature::{exact_order, simplex_rule};
use lifted_core::smooth::{
    directional_derivative_scalar, flow, lie_bracket, metric_gradient, FormOnX, RiemannianMetric, SmoothScalarField,
    SmoothVectorField,
};
use lifted_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Params;
use crate::gen::{self, coef, point, smooth_expr};
use crate::harness::{rel_scale, Group, Outcome};

pub fn groups() -> Vec<Group> {
    vec![
        Group {
            name: "flow-group",
            desc: "e^{(s+t)v}(x) = e^{tv}(e^{sv}(x)) for compactly supported v",
            anchor: "the flow e^{tv} of a compactly supported vector field",
            count: 30,
            tolerance: 1e-8,
            run: flow_group,
        },
        Group {
            name: "flow-rotation",
            desc: "RK4 flow of the planar rotation field against cos/sin closed form",
            anchor: "the flow e^{tv} of a compactly supported vector field",
            count: 20,
            tolerance: 1e-10,
            run: flow_rotation,
        },
        Group {
            name: "bracket-jacobi",
            desc: "Lie bracket antisymmetry and Jacobi identity at a random point",
            anchor: "the Lie bracket of vector fields",
            count: 30,
            tolerance: 1e-10,
            run: bracket_jacobi,
        },
        Group {
            name: "directional-derivative",
            desc: "d_vφ(x) against central difference of φ along the flow",
            anchor: "d_vφ the directional derivative of φ along v",
            count: 30,
            tolerance: 1e-6,
            run: directional_derivative,
        },
        Group {
            name: "forms-d-squared",
            desc: "d∘d = 0 for 1- and 2-forms on R^3",
            anchor: "differential forms on X",
            count: 30,
            tolerance: 1e-10,
            run: forms_d_squared,
        },
        Group {
            name: "forms-cartan",
            desc: "L_vω = i_v dω + d i_v ω and d L_v = L_v d on R^3",
            anchor: "differential forms on X",
            count: 30,
            tolerance: 1e-10,
            run: forms_cartan,
        },
        Group {
            name: "metric-gradient",
            desc: "g(∇_gφ, u) = dφ(u) for a conformal metric",
            anchor: "the gradient with respect to the Riemannian metric g",
            count: 20,
            tolerance: 1e-10,
            run: metric_gradient_duality,
        },
        Group {
            name: "simplex-quadrature",
            desc: "collapsed Gauss rule integrates monomials exactly on the 2- and 3-simplex",
            anchor: "integration of forms over simplices",
            count: 20,
            tolerance: 1e-14,
            run: simplex_quadrature,
        },
    ]
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn flow_group(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let m = gen::dim(p, rng);
    let v = gen::compact_field(m, rng);
    let x0 = point(m, 1.0, rng);
    let (s, t) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let two = flow(&v, t, &flow(&v, s, &x0)?)?;
    let one = flow(&v, s + t, &x0)?;
    Ok(Outcome::Residual(max_dev(&one, &two)))
}

fn flow_rotation(rng: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    let v = SmoothVectorField::linear(&[vec![0.0, -1.0], vec![1.0, 0.0]], &[0.0, 0.0])?;
    let x0 = point(2, 2.0, rng);
    let t = rng.random_range(-3.0..3.0);
    let y = flow(&v, t, &x0)?;
    let (c, s) = (f64::cos(t), f64::sin(t));
    let want = [c * x0[0] - s * x0[1], s * x0[0] + c * x0[1]];
    Ok(Outcome::Residual(max_dev(&y, &want)))
}

fn bracket_jacobi(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let m = gen::dim(p, rng);
    let (u, v, w) = (gen::liftable_field(m, rng), gen::liftable_field(m, rng), gen::liftable_field(m, rng));
    let x0 = point(m, 1.5, rng);
    let uv = lie_bracket(&u, &v)?.eval(&x0);
    let vu = lie_bracket(&v, &u)?.eval(&x0);
    let j = [
        lie_bracket(&u, &lie_bracket(&v, &w)?)?.eval(&x0),
        lie_bracket(&v, &lie_bracket(&w, &u)?)?.eval(&x0),
        lie_bracket(&w, &lie_bracket(&u, &v)?)?.eval(&x0),
    ];
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..m {
        res = res.max((uv[i] + vu[i]).abs()).max((j[0][i] + j[1][i] + j[2][i]).abs());
        scale = scale.max(uv[i].abs()).max(j[0][i].abs()).max(j[1][i].abs()).max(j[2][i].abs());
    }
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

fn directional_derivative(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let m = gen::dim(p, rng);
    let v = gen::liftable_field(m, rng);
    let phi = SmoothScalarField::from_expr(m, smooth_expr(m, rng));
    let x0 = point(m, 1.0, rng);
    let exact = directional_derivative_scalar(&v, &phi)?.eval(&x0);
    let h = 1e-4;
    let fd = (phi.eval(&flow(&v, h, &x0)?) - phi.eval(&flow(&v, -h, &x0)?)) / (2.0 * h);
    Ok(Outcome::Residual((exact - fd).abs() / (1.0 + exact.abs())))
}

fn one_form(rng: &mut ChaCha8Rng) -> Result<FormOnX> {
    let terms = (0..3).map(|i| (vec![i], smooth_expr(3, rng))).collect();
    FormOnX::new(3, 1, terms, None)
}

fn vectors(k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..k).map(|_| point(3, 1.0, rng)).collect()
}

fn forms_d_squared(rng: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    let omega = one_form(rng)?;
    let f = FormOnX::function(&SmoothScalarField::from_expr(3, smooth_expr(3, rng)));
    let x0 = point(3, 1.0, rng);
    let vs = vectors(3, rng);
    let a = omega.exterior_d()?.exterior_d()?.eval(&x0, &vs)?;
    let b = f.exterior_d()?.exterior_d()?.eval(&x0, &vs[..2])?;
    let scale = omega.exterior_d()?.eval(&x0, &vs[..2])?.abs();
    Ok(Outcome::Residual(rel_scale(a.abs().max(b.abs()), scale)))
}

fn forms_cartan(rng: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    let omega = one_form(rng)?;
    let v = gen::liftable_field(3, rng);
    let x0 = point(3, 1.0, rng);
    let vs = vectors(2, rng);
    let lie = omega.lie_derivative(&v)?;
    let magic = omega.exterior_d()?.contract(&v)?.add(&omega.contract(&v)?.exterior_d()?)?;
    let (l, r) = (lie.eval(&x0, &vs[..1])?, magic.eval(&x0, &vs[..1])?);
    let dl = lie.exterior_d()?.eval(&x0, &vs)?;
    let ld = omega.exterior_d()?.lie_derivative(&v)?.eval(&x0, &vs)?;
    let res = (l - r).abs().max((dl - ld).abs());
    let scale = l.abs().max(r.abs()).max(dl.abs()).max(ld.abs());
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

fn metric_gradient_duality(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let m = gen::dim(p, rng);
    let conf = SmoothScalarField::from_expr(m, (smooth_expr(m, rng) * 0.3).sin());
    let g = RiemannianMetric::conformal(&conf);
    let phi = SmoothScalarField::from_expr(m, smooth_expr(m, rng));
    let grad = metric_gradient(&phi, &g)?;
    let x0 = point(m, 1.0, rng);
    let u: Vec<f64> = (0..m).map(|_| coef(rng)).collect();
    let lhs = g.inner(&x0, &grad.eval(&x0), &u);
    let rhs: f64 = phi.grad(&x0).iter().zip(&u).map(|(a, b)| a * b).sum();
    Ok(Outcome::Residual(rel_scale((lhs - rhs).abs(), lhs.abs().max(rhs.abs()))))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn simplex_quadrature(rng: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    let e: Vec<u32> = (0..3).map(|_| rng.random_range(0..4)).collect();
    let tri = simplex_rule(2, exact_order(2, (e[0] + e[1]) as usize));
    let got: f64 = tri.iter().map(|(t, w)| w * t[0].powi(e[0] as i32) * t[1].powi(e[1] as i32)).sum();
    let want = factorial(e[0]) * factorial(e[1]) / factorial(e[0] + e[1] + 2);
    let tet = simplex_rule(3, exact_order(3, e.iter().sum::<u32>() as usize));
    let got3: f64 = tet
        .iter()
        .map(|(t, w)| w * (0..3).map(|i| t[i].powi(e[i] as i32)).product::<f64>())
        .sum();
    let want3 = e.iter().map(|&a| factorial(a)).product::<f64>() / factorial(e.iter().sum::<u32>() + 3);
    Ok(Outcome::Residual((got - want).abs().max((got3 - want3).abs())))
}
