use lifted_core::cylinder::Cylinder;
use lifted_core::measure::{
    convolution_pullback, density_pullback, embedding_diff_residual, flow_fd_derivative, lie_compat_residual,
    lifted_derivative, markov_check, tangent_inner_product, CylinderFunctionM, MeasureGeometry, ParticleMeasure,
};
use lifted_core::smooth::{make_bump, RiemannianMetric, SmoothScalarField};
use lifted_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{leibniz, linearity};
use crate::config::Params;
use crate::gen::{self, point, smooth_expr, x};
use crate::harness::{rel_one, rel_scale, Group, Outcome};

/// Step of the central difference along the flow; truncation error is O(h²),
/// rounding O(ε/h), both well under the 1e-5 agreement tolerance here.
pub const FD_STEP: f64 = 1e-4;

pub fn groups() -> Vec<Group> {
    vec![
        Group {
            name: "flow-oracle",
            desc: "lifted derivative formula against central difference along the pushforward flow",
            anchor: "if ξ:R^{2n}→R is defined by",
            count: 50,
            tolerance: 1e-5,
            run: flow_oracle,
        },
        Group {
            name: "lie-compat",
            desc: "(d̃_vd̃_w − d̃_wd̃_v)F = d̃_{[v,w]}F on particle measures",
            anchor: "we have showed that any function",
            count: 50,
            tolerance: 1e-8,
            run: lie_compat,
        },
        Group {
            name: "leibniz",
            desc: "Leibniz rule for basic and combined derivations on measure functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, p| Ok(Outcome::Residual(leibniz(&geometry(p, rng), rng)?)),
        },
        Group {
            name: "linearity",
            desc: "d̃_{sv+tw}F = s·d̃_vF + t·d̃_wF on measure functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, p| Ok(Outcome::Residual(linearity(&geometry(p, rng), rng)?)),
        },
        Group {
            name: "gradient-duality",
            desc: "⟨[v], ∇F(μ)⟩_g = d̃_vF(μ) for 20 fields per instance",
            anchor: "canonical vector field w^μ",
            count: 10,
            tolerance: 1e-9,
            run: gradient_duality,
        },
        Group {
            name: "markov",
            desc: "𝔏(tanh∘F, tanh∘F) ≤ 𝔏(F, F); residual is the excess",
            anchor: "is a Markovian form",
            count: 100,
            tolerance: 1e-12,
            run: markov,
        },
        Group {
            name: "markov-equality",
            desc: "the identity contraction leaves 𝔏(F, F) unchanged",
            anchor: "is a Markovian form",
            count: 10,
            tolerance: 1e-12,
            run: markov_equality,
        },
        Group {
            name: "embedding-diff",
            desc: "d̃_{v'}(F∘Υ̂)(μ') = (d̃_vF)(Υ_*μ') for affine embeddings",
            anchor: "Thus Υ̂ is differentiable",
            count: 20,
            tolerance: 1e-9,
            run: embedding_diff,
        },
        Group {
            name: "convolution",
            desc: "(F∘ν̂)(μ) = F(μ⋆ν) through the pulled-back generators",
            anchor: "convolution with a fixed measure",
            count: 20,
            tolerance: 1e-12,
            run: convolution,
        },
        Group {
            name: "density",
            desc: "(F∘f̂)(μ) = F(f·μ) through the pulled-back generators",
            anchor: "multiplication by a smooth density",
            count: 20,
            tolerance: 1e-12,
            run: density,
        },
    ]
}

fn geometry(p: &Params, rng: &mut ChaCha8Rng) -> MeasureGeometry {
    MeasureGeometry::new(gen::dim(p, rng), 5, 1.0)
}

fn instance(p: &Params, rng: &mut ChaCha8Rng) -> (CylinderFunctionM, ParticleMeasure, usize) {
    let m = gen::dim(p, rng);
    let n = gen::arity(p, rng);
    (gen::measure_function(m, n, rng), gen::particle_measure(m, rng), m)
}

fn flow_oracle(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, mu, m) = instance(p, rng);
    let v = gen::liftable_field(m, rng);
    let formula = lifted_derivative(&v, &f)?.eval(&mu)?;
    let fd = flow_fd_derivative(&f, &v, &mu, FD_STEP)?;
    Ok(Outcome::Residual(rel_one(formula, fd)))
}

fn lie_compat(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, mu, m) = instance(p, rng);
    let (v, w) = (gen::liftable_field(m, rng), gen::liftable_field(m, rng));
    let (res, scale) = lie_compat_residual(&v, &w, &f, &mu)?;
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

/// Identity or a conformal metric with a bounded factor.
fn metric(m: usize, rng: &mut ChaCha8Rng) -> RiemannianMetric {
    if rng.random_bool(0.5) {
        RiemannianMetric::euclidean(m)
    } else {
        RiemannianMetric::conformal(&SmoothScalarField::from_expr(m, (smooth_expr(m, rng) * 0.3).sin()))
    }
}

fn gradient_duality(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, mu, m) = instance(p, rng);
    let g = metric(m, rng);
    let (w, _) = lifted_core::measure::gradient(&f, &mu, &g)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = gen::liftable_field(m, rng);
        let lhs = tangent_inner_product(&v, &w, &mu, &g)?;
        let rhs = lifted_derivative(&v, &f)?.eval(&mu)?;
        worst = worst.max(rel_scale((lhs - rhs).abs(), lhs.abs().max(rhs.abs())));
    }
    Ok(Outcome::Residual(worst))
}

/// A functional with compactly supported outer function and its ensemble.
fn dirichlet_instance(p: &Params, rng: &mut ChaCha8Rng) -> (CylinderFunctionM, lifted_core::measure::RandomMeasure, RiemannianMetric) {
    let m = gen::dim(p, rng);
    let n = gen::arity(p, rng);
    let gens = (0..n).map(|_| gen::bump_function(m, rng)).collect();
    let f = Cylinder::new(gen::compact_psi(n, rng), gens).expect("arity matches");
    let theta = gen::random_measure(m, p.ensemble, rng);
    (f, theta, metric(m, rng))
}

fn markov(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, theta, g) = dirichlet_instance(p, rng);
    let tanh = SmoothScalarField::from_expr(1, x(0).tanh());
    let rep = markov_check(&f, &tanh, &theta, &g)?;
    Ok(Outcome::Residual((rep.lhs - rep.rhs).max(0.0)))
}

fn markov_equality(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, theta, g) = dirichlet_instance(p, rng);
    let ident = SmoothScalarField::from_expr(1, x(0));
    let rep = markov_check(&f, &ident, &theta, &g)?;
    Ok(Outcome::Residual(rel_scale((rep.lhs - rep.rhs).abs(), rep.rhs.abs())))
}

fn embedding_diff(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let m = rng.random_range(2..=p.m.max(2));
    let k = rng.random_range(1..m);
    let emb = gen::embedding(k, m, rng);
    let n = gen::arity(p, rng);
    let f = gen::measure_function(m, n, rng);
    let mu = gen::particle_measure(k, rng);
    let v = gen::liftable_field(k, rng);
    let (res, scale) = embedding_diff_residual(&emb, &v, &f, &mu)?;
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

fn convolution(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, mu, m) = instance(p, rng);
    let nu = gen::particle_measure(m, rng);
    let lhs = convolution_pullback(&nu, &f)?.eval(&mu)?;
    let rhs = f.eval(&mu.convolve(&nu)?)?;
    Ok(Outcome::Residual(rel_scale((lhs - rhs).abs(), lhs.abs())))
}

fn density(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, mu, m) = instance(p, rng);
    let dens = make_bump(&point(m, 0.5, rng), 3.0)?;
    let lhs = density_pullback(&dens, &f)?.eval(&mu)?;
    let rhs = f.eval(&mu.with_density(&dens)?)?;
    Ok(Outcome::Residual(rel_scale((lhs - rhs).abs(), lhs.abs())))
}
