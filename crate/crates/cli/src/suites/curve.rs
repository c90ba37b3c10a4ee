use std::f64::consts::PI;

use lifted_core::curve::{
    action_eval, flow_fd_derivative, lie_compat_residual, lifted_derivative, prolong,
    prolongation_bracket_residual, ActionFunctional, Curve, CurveGeometry, LagrangianDensity,
};
use lifted_core::cylinder::Cylinder;
use lifted_core::smooth::SmoothScalarField;
use lifted_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{leibniz, linearity, Sampled};
use crate::config::Params;
use crate::gen::{self, point, x};
use crate::harness::{rel_one, rel_scale, Group, Outcome};
use crate::suites::measure::FD_STEP;

impl Sampled for CurveGeometry {
    fn base_dim(&self) -> usize {
        self.dim()
    }

    fn element(&self, rng: &mut ChaCha8Rng) -> ActionFunctional {
        let n = rng.random_range(1..=2);
        gen::action_functional(self.dim(), n, rng)
    }
}

const LINEAR: &str = "Using the linear approximation";

pub fn groups() -> Vec<Group> {
    vec![
        Group {
            name: "flow-oracle",
            desc: "lifted derivative against central difference of F(e^{tv}∘C), velocity transported by v†",
            anchor: LINEAR,
            count: 30,
            tolerance: 1e-5,
            run: flow_oracle,
        },
        Group {
            name: "lie-compat",
            desc: "(d̃_vd̃_w − d̃_wd̃_v)F = d̃_{[v,w]}F on curves",
            anchor: "we have showed that any function",
            count: 50,
            tolerance: 1e-8,
            run: lie_compat,
        },
        Group {
            name: "leibniz",
            desc: "Leibniz rule for basic and combined derivations on action functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, p| Ok(Outcome::Residual(leibniz(&geometry(p, rng), rng)?)),
        },
        Group {
            name: "linearity",
            desc: "d̃_{sv+tw}F = s·d̃_vF + t·d̃_wF on action functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, p| Ok(Outcome::Residual(linearity(&geometry(p, rng), rng)?)),
        },
        Group {
            name: "prolong-bracket",
            desc: "[v,w]† = [v†, w†] at random points of the tangent bundle",
            anchor: "where v†:R^k×R^k→R^k×R^k is defined",
            count: 30,
            tolerance: 1e-8,
            run: prolong_bracket,
        },
        Group {
            name: "prolong-oracle",
            desc: "v†(x,y) = (v(x), Jv(x)·y) against the field and Jacobian oracles",
            anchor: "where v†:R^k×R^k→R^k×R^k is defined",
            count: 20,
            tolerance: 1e-12,
            run: prolong_oracle,
        },
        Group {
            name: "reparametrization",
            desc: "smoothed arc length is invariant under u ↦ αu + β, α > 0",
            anchor: "generalized action functional",
            count: 20,
            tolerance: 1e-8,
            run: reparametrization,
        },
        Group {
            name: "action-circle",
            desc: "∫|Ċ|² over the unit circle on [0, 2π] equals 2π",
            anchor: "generalized action functional",
            count: 1,
            tolerance: 1e-10,
            run: action_circle,
        },
    ]
}

fn k_of(p: &Params, rng: &mut ChaCha8Rng) -> usize {
    gen::dim(p, rng).min(2)
}

fn geometry(p: &Params, rng: &mut ChaCha8Rng) -> CurveGeometry {
    CurveGeometry::new(k_of(p, rng))
}

fn instance(p: &Params, rng: &mut ChaCha8Rng) -> (ActionFunctional, Curve, usize) {
    let k = k_of(p, rng);
    let n = gen::arity(p, rng).min(2);
    (gen::action_functional(k, n, rng), gen::curve(k, rng), k)
}

fn flow_oracle(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, c, k) = instance(p, rng);
    let v = gen::liftable_field(k, rng);
    let formula = lifted_derivative(&v, &f)?.eval(&c)?;
    let fd = flow_fd_derivative(&f, &v, &c, FD_STEP)?;
    Ok(Outcome::Residual(rel_one(formula, fd)))
}

fn lie_compat(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, c, k) = instance(p, rng);
    let (v, w) = (gen::liftable_field(k, rng), gen::liftable_field(k, rng));
    let (res, scale) = lie_compat_residual(&v, &w, &f, &c)?;
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

fn prolong_bracket(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let k = gen::dim(p, rng);
    let (v, w) = (gen::liftable_field(k, rng), gen::liftable_field(k, rng));
    let pts: Vec<Vec<f64>> = (0..5).map(|_| point(2 * k, 1.5, rng)).collect();
    let scale = pts
        .iter()
        .map(|q| prolong(&lifted_core::smooth::lie_bracket(&v, &w).expect("same dim")).eval(q))
        .flat_map(|e| e.into_iter().map(f64::abs))
        .fold(0.0, f64::max);
    Ok(Outcome::Residual(rel_scale(prolongation_bracket_residual(&v, &w, &pts)?, scale)))
}

fn prolong_oracle(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let k = gen::dim(p, rng);
    let v = gen::compact_field(k, rng);
    let vd = prolong(&v);
    let (xs, ys) = (point(k, 1.5, rng), point(k, 1.0, rng));
    let mut q = xs.clone();
    q.extend_from_slice(&ys);
    let got = vd.eval(&q);
    let mut want = v.eval(&xs);
    let j = v.jacobian(&xs);
    want.extend(j.iter().map(|row| row.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>()));
    let res = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Outcome::Residual(res))
}

fn identity_of(l: LagrangianDensity) -> ActionFunctional {
    Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![l]).expect("arity 1")
}

fn reparametrization(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let k = gen::dim(p, rng);
    let c = gen::curve(k, rng);
    let f = identity_of(LagrangianDensity::smoothed_speed(k, 1e-6));
    let (alpha, beta) = (rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0));
    let before = action_eval(&f, &c)?;
    let after = action_eval(&f, &c.reparametrized(alpha, beta)?)?;
    Ok(Outcome::Residual(rel_scale((before - after).abs(), before.abs())))
}

fn action_circle(_: &mut ChaCha8Rng, _: &Params) -> Result<Outcome> {
    let c = Curve::analytic(0.0, 2.0 * PI, vec![x(0).cos(), x(0).sin()])?;
    let f = identity_of(LagrangianDensity::kinetic(2));
    Ok(Outcome::Residual((action_eval(&f, &c)? - 2.0 * PI).abs()))
}
