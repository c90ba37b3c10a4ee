#![allow(dead_code)]

use lifted_core::curve::{random_curve, ActionFunctional, Curve, LagrangianDensity};
use lifted_core::cylinder::Cylinder;
use lifted_core::mapping::{CylinderFunctionMap, FiniteMeasureSpaceY, MappingPoint};
use lifted_core::measure::{CylinderFunctionM, ParticleMeasure};
use lifted_core::smooth::{make_bump, SmoothScalarField, SmoothVectorField};
use lifted_core::Expr;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn x(i: usize) -> Expr {
    Expr::var(i)
}

fn coef(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// Random smooth function of `dim` variables: a quadratic plus a sine.
pub fn smooth_expr(dim: usize, rng: &mut ChaCha8Rng) -> Expr {
    let mut terms = vec![Expr::constant(coef(rng))];
    for i in 0..dim {
        terms.push(x(i) * coef(rng));
        for j in i..dim {
            terms.push(x(i) * x(j) * (0.5 * coef(rng)));
        }
    }
    let lin = Expr::sum((0..dim).map(|i| x(i) * coef(rng)));
    terms.push(lin.sin() * coef(rng));
    Expr::sum(terms)
}

pub fn point(dim: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-r..r)).collect()
}

/// A compactly supported field, or an affine one.
pub fn liftable_field(dim: usize, rng: &mut ChaCha8Rng) -> SmoothVectorField {
    if rng.random_bool(0.7) {
        let b = make_bump(&point(dim, 0.5, rng), rng.random_range(2.5..4.0)).unwrap();
        SmoothVectorField::masked(&b, (0..dim).map(|_| smooth_expr(dim, rng)).collect()).unwrap()
    } else {
        let a: Vec<Vec<f64>> = (0..dim).map(|_| point(dim, 1.0, rng)).collect();
        SmoothVectorField::linear(&a, &point(dim, 1.0, rng)).unwrap()
    }
}

pub fn measure_instance(rng: &mut ChaCha8Rng) -> (CylinderFunctionM, ParticleMeasure, usize) {
    let m = rng.random_range(1..=3);
    let n = rng.random_range(1..=3);
    let gens = (0..n)
        .map(|_| {
            let b = make_bump(&point(m, 0.5, rng), rng.random_range(2.0..3.0)).unwrap();
            b.mul(&SmoothScalarField::from_expr(m, smooth_expr(m, rng))).unwrap()
        })
        .collect();
    let psi = SmoothScalarField::from_expr(n, smooth_expr(n, rng));
    let atoms = (0..rng.random_range(1..=5))
        .map(|_| (point(m, 1.0, rng), rng.random_range(0.5..2.0)))
        .collect();
    (Cylinder::new(psi, gens).unwrap(), ParticleMeasure::new(m, atoms).unwrap(), m)
}

pub fn mapping_instance(rng: &mut ChaCha8Rng) -> (CylinderFunctionMap, MappingPoint, usize) {
    let m = rng.random_range(1..=2);
    let size = rng.random_range(2..=4);
    let n = rng.random_range(1..=2);
    let measures: Vec<Vec<f64>> = (0..n).map(|_| (0..size).map(|_| rng.random_range(0.1..1.0)).collect()).collect();
    let space = FiniteMeasureSpaceY::with_measures(size, measures.clone()).unwrap();
    let phi = SmoothScalarField::from_expr(m * n, smooth_expr(m * n, rng));
    let f = CylinderFunctionMap::new(m, phi, space.measures().iter().map(|(_, w)| w.clone()).collect()).unwrap();
    let p = MappingPoint::new(m, (0..size).map(|_| point(m, 1.0, rng)).collect()).unwrap();
    (f, p, m)
}

pub fn curve_instance(rng: &mut ChaCha8Rng) -> (ActionFunctional, Curve, usize) {
    let k = rng.random_range(1..=2);
    let n = rng.random_range(1..=2);
    let dens = (0..n)
        .map(|_| {
            let e = smooth_expr(k, rng) + Expr::sum((k..2 * k).map(|i| x(i) * x(i) * coef(rng) + x(i) * x(i - k) * coef(rng)));
            LagrangianDensity::new(k, e).unwrap()
        })
        .collect();
    let psi = SmoothScalarField::from_expr(n, smooth_expr(n, rng));
    (Cylinder::new(psi, dens).unwrap(), random_curve(k, rng), k)
}
