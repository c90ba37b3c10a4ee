use lifted_core::mapping::{
    embedding_diff_residual, flow_fd_derivative, lie_compat_residual, lifted_derivative, precompose, push_measure,
    CylinderFunctionMap, FiniteMeasureSpaceY, MappingGeometry, MappingPoint,
};
use lifted_core::smooth::SmoothScalarField;
use lifted_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{leibniz, linearity, Sampled};
use crate::config::Params;
use crate::gen::{self, smooth_expr};
use crate::harness::{rel_one, rel_scale, Group, Outcome};
use crate::suites::measure::FD_STEP;

impl Sampled for MappingGeometry {
    fn base_dim(&self) -> usize {
        self.dim()
    }

    /// Arity 1 or 2 over measures of the fixed family.
    fn element(&self, rng: &mut ChaCha8Rng) -> CylinderFunctionMap {
        let m = self.dim();
        let n = rng.random_range(1..=2);
        let fam = self.space().measures();
        let measures = (0..n).map(|_| fam[rng.random_range(0..fam.len())].1.clone()).collect();
        CylinderFunctionMap::new(m, SmoothScalarField::from_expr(m * n, smooth_expr(m * n, rng)), measures)
            .expect("dims match")
    }
}

pub fn groups() -> Vec<Group> {
    vec![
        Group {
            name: "flow-oracle",
            desc: "lifted derivative formula against central difference of F(e^{tv}∘P)",
            anchor: "if ξ:R^{2n}→R is defined by",
            count: 30,
            tolerance: 1e-5,
            run: flow_oracle,
        },
        Group {
            name: "lie-compat",
            desc: "(d̃_vd̃_w − d̃_wd̃_v)F = d̃_{[v,w]}F on mappings",
            anchor: "we have showed that any function",
            count: 50,
            tolerance: 1e-8,
            run: lie_compat,
        },
        Group {
            name: "leibniz",
            desc: "Leibniz rule for basic and combined derivations on mapping functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, p| Ok(Outcome::Residual(leibniz(&geometry(p, rng), rng)?)),
        },
        Group {
            name: "linearity",
            desc: "d̃_{sv+tw}F = s·d̃_vF + t·d̃_wF on mapping functionals",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: |rng, p| Ok(Outcome::Residual(linearity(&geometry(p, rng), rng)?)),
        },
        Group {
            name: "embedding-diff",
            desc: "d̃_{v'}(F∘Υ̂)(P') = (d̃_vF)(Υ∘P') for affine embeddings",
            anchor: "Thus Υ̂ is differentiable",
            count: 20,
            tolerance: 1e-9,
            run: embedding_diff,
        },
        Group {
            name: "block-sum",
            desc: "F[φ +̄ φ': μ, μ'] = F + F' for probability measures",
            anchor: "the block sum and block product of cylinder functions",
            count: 20,
            tolerance: 1e-12,
            run: block_sum,
        },
        Group {
            name: "block-product",
            desc: "F[φ ×̄ φ': μ, μ'] = F · F'",
            anchor: "the block sum and block product of cylinder functions",
            count: 20,
            tolerance: 1e-12,
            run: block_product,
        },
        Group {
            name: "precompose",
            desc: "F[φ: μ] ∘ π̂ = F[φ: π_*μ]",
            anchor: "precomposition with a map of measure spaces",
            count: 20,
            tolerance: 1e-12,
            run: precompose_case,
        },
    ]
}

fn space(n: usize, size: usize, probability: bool, rng: &mut ChaCha8Rng) -> FiniteMeasureSpaceY {
    let measures = (0..n)
        .map(|_| {
            if probability {
                gen::probability(size, rng)
            } else {
                (0..size).map(|_| rng.random_range(0.1..1.0)).collect()
            }
        })
        .collect();
    FiniteMeasureSpaceY::with_measures(size, measures).expect("positive weights")
}

fn geometry(p: &Params, rng: &mut ChaCha8Rng) -> MappingGeometry {
    let m = gen::dim(p, rng).min(2);
    let size = rng.random_range(2..=4);
    MappingGeometry::new(m, space(3, size, false, rng), 1.0)
}

fn instance(p: &Params, rng: &mut ChaCha8Rng) -> (CylinderFunctionMap, MappingPoint, usize) {
    let m = gen::dim(p, rng);
    let n = gen::arity(p, rng).min(3);
    let size = rng.random_range(2..=4);
    (gen::mapping_function(m, n, size, rng), gen::mapping_point(m, size, rng), m)
}

fn flow_oracle(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, pt, m) = instance(p, rng);
    let v = gen::liftable_field(m, rng);
    let formula = lifted_derivative(&v, &f)?.eval(&pt)?;
    let fd = flow_fd_derivative(&f, &v, &pt, FD_STEP)?;
    Ok(Outcome::Residual(rel_one(formula, fd)))
}

fn lie_compat(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, pt, m) = instance(p, rng);
    let (v, w) = (gen::liftable_field(m, rng), gen::liftable_field(m, rng));
    let (res, scale) = lie_compat_residual(&v, &w, &f, &pt)?;
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

fn embedding_diff(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let m = rng.random_range(2..=p.m.max(2));
    let k = rng.random_range(1..m);
    let emb = gen::embedding(k, m, rng);
    let size = rng.random_range(2..=3);
    let n = gen::arity(p, rng).min(2);
    let f = gen::mapping_function(m, n, size, rng);
    let pt = gen::mapping_point(k, size, rng);
    let v = gen::liftable_field(k, rng);
    let (res, scale) = embedding_diff_residual(&emb, &v, &f, &pt)?;
    Ok(Outcome::Residual(rel_scale(res, scale)))
}

/// Two functionals over probability measures, and a point.
fn probability_pair(p: &Params, rng: &mut ChaCha8Rng) -> Result<(CylinderFunctionMap, CylinderFunctionMap, MappingPoint)> {
    let m = gen::dim(p, rng).min(2);
    let size = rng.random_range(2..=4);
    let sp = space(2, size, true, rng);
    let mk = |i: usize, rng: &mut ChaCha8Rng| {
        CylinderFunctionMap::new(m, SmoothScalarField::from_expr(m, smooth_expr(m, rng)), vec![sp.measure(i).to_vec()])
    };
    let f = mk(0, rng)?;
    let g = mk(1, rng)?;
    Ok((f, g, gen::mapping_point(m, size, rng)))
}

fn block_sum(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, g, pt) = probability_pair(p, rng)?;
    let want = f.eval(&pt)? + g.eval(&pt)?;
    let got = f.block_sum(&g)?.eval(&pt)?;
    Ok(Outcome::Residual(rel_scale((got - want).abs(), want.abs())))
}

fn block_product(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let (f, g, pt) = probability_pair(p, rng)?;
    let want = f.eval(&pt)? * g.eval(&pt)?;
    let got = f.block_product(&g)?.eval(&pt)?;
    Ok(Outcome::Residual(rel_scale((got - want).abs(), want.abs())))
}

fn precompose_case(rng: &mut ChaCha8Rng, p: &Params) -> Result<Outcome> {
    let m = gen::dim(p, rng).min(2);
    let (size, target_size) = (rng.random_range(2..=4), rng.random_range(2..=4));
    let pi: Vec<usize> = (0..size).map(|_| rng.random_range(0..target_size)).collect();
    let n = rng.random_range(1..=2);
    let f = gen::mapping_function(m, n, size, rng);
    let pushed = f.measures().iter().map(|mu| push_measure(&pi, mu, target_size)).collect::<Result<Vec<_>>>()?;
    let target = FiniteMeasureSpaceY::with_measures(target_size, pushed)?;
    let pt = gen::mapping_point(m, target_size, rng);
    let lhs = precompose(&pi, &target, &f)?.eval(&pt)?;
    let rhs = f.eval(&pt.precompose(&pi)?)?;
    Ok(Outcome::Residual(rel_scale((lhs - rhs).abs(), lhs.abs())))
}
