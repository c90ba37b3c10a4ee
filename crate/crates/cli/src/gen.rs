//! Random instances for the suites. Every draw comes from the case's own
//! seeded stream, so instances are reproducible by case id.

use lifted_core::curve::{random_curve, ActionFunctional, Curve, LagrangianDensity};
use lifted_core::cylinder::Cylinder;
use lifted_core::mapping::{CylinderFunctionMap, MappingPoint};
use lifted_core::measure::{CylinderFunctionM, ParticleMeasure, RandomMeasure};
use lifted_core::smooth::{make_bump, AffineEmbedding, Ball, FormOnX, SmoothScalarField, SmoothVectorField};
use lifted_core::Expr;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Params;

pub fn x(i: usize) -> Expr {
    Expr::var(i)
}

pub fn coef(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

pub fn point(dim: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-r..r)).collect()
}

/// A quadratic plus `sin` of a random linear form.
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

/// Polynomial of total degree at most `deg` with coefficients in `[-1, 1)`.
pub fn poly_expr(dim: usize, deg: u32, rng: &mut ChaCha8Rng) -> Expr {
    fn rec(dim: usize, start: usize, left: u32, mono: Expr, out: &mut Vec<Expr>) {
        out.push(mono.clone());
        if left == 0 {
            return;
        }
        for i in start..dim {
            rec(dim, i, left - 1, mono.clone() * Expr::var(i), out);
        }
    }
    let mut monos = Vec::new();
    rec(dim, 0, deg, Expr::one(), &mut monos);
    Expr::sum(monos.into_iter().map(|m| m * coef(rng)))
}

pub fn dim(p: &Params, rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(1..=p.m)
}

pub fn arity(p: &Params, rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(1..=p.n)
}

pub fn compact_field(dim: usize, rng: &mut ChaCha8Rng) -> SmoothVectorField {
    let b = make_bump(&point(dim, 0.5, rng), rng.random_range(2.5..4.0)).expect("positive radius");
    SmoothVectorField::masked(&b, (0..dim).map(|_| smooth_expr(dim, rng)).collect()).expect("matching dims")
}

pub fn affine_field(dim: usize, rng: &mut ChaCha8Rng) -> SmoothVectorField {
    let a: Vec<Vec<f64>> = (0..dim).map(|_| point(dim, 1.0, rng)).collect();
    SmoothVectorField::linear(&a, &point(dim, 1.0, rng)).expect("square matrix")
}

/// Compactly supported with probability 0.7, affine otherwise.
pub fn liftable_field(dim: usize, rng: &mut ChaCha8Rng) -> SmoothVectorField {
    if rng.random_bool(0.7) {
        compact_field(dim, rng)
    } else {
        affine_field(dim, rng)
    }
}

/// `bump · smooth`, compactly supported.
pub fn bump_function(dim: usize, rng: &mut ChaCha8Rng) -> SmoothScalarField {
    let b = make_bump(&point(dim, 0.5, rng), rng.random_range(2.0..3.0)).expect("positive radius");
    b.mul(&SmoothScalarField::from_expr(dim, smooth_expr(dim, rng))).expect("matching dims")
}

/// A smooth outer function cut off far from the origin.
pub fn compact_psi(n: usize, rng: &mut ChaCha8Rng) -> SmoothScalarField {
    let cut = make_bump(&vec![0.0; n], 8.0).expect("positive radius");
    SmoothScalarField::with_support(n, smooth_expr(n, rng) * cut.expr(), cut.support().cloned())
}

pub fn particle_measure(dim: usize, rng: &mut ChaCha8Rng) -> ParticleMeasure {
    let atoms = (0..rng.random_range(1..=5))
        .map(|_| (point(dim, 1.0, rng), rng.random_range(0.5..2.0)))
        .collect();
    ParticleMeasure::new(dim, atoms).expect("positive weights")
}

pub fn random_measure(dim: usize, members: usize, rng: &mut ChaCha8Rng) -> RandomMeasure {
    RandomMeasure::uniform((0..members).map(|_| particle_measure(dim, rng)).collect()).expect("nonempty ensemble")
}

pub fn measure_function(dim: usize, n: usize, rng: &mut ChaCha8Rng) -> CylinderFunctionM {
    let gens = (0..n).map(|_| bump_function(dim, rng)).collect();
    Cylinder::new(SmoothScalarField::from_expr(n, smooth_expr(n, rng)), gens).expect("arity matches")
}

/// Random probability vectors on a `size`-point set.
pub fn probability(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..size).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn mapping_function(dim: usize, n: usize, size: usize, rng: &mut ChaCha8Rng) -> CylinderFunctionMap {
    let measures = (0..n).map(|_| (0..size).map(|_| rng.random_range(0.1..1.0)).collect()).collect();
    CylinderFunctionMap::new(dim, SmoothScalarField::from_expr(dim * n, smooth_expr(dim * n, rng)), measures)
        .expect("dims match")
}

pub fn mapping_point(dim: usize, size: usize, rng: &mut ChaCha8Rng) -> MappingPoint {
    MappingPoint::new(dim, (0..size).map(|_| point(dim, 1.0, rng)).collect()).expect("dims match")
}

pub fn lagrangian(k: usize, rng: &mut ChaCha8Rng) -> LagrangianDensity {
    let vel = Expr::sum((k..2 * k).map(|i| x(i) * x(i) * coef(rng) + x(i) * x(i - k) * coef(rng)));
    let e = smooth_expr(k, rng) + vel + (x(k) * coef(rng) + x(0)).sin() * 0.5;
    LagrangianDensity::new(k, e).expect("variables in range")
}

pub fn action_functional(k: usize, n: usize, rng: &mut ChaCha8Rng) -> ActionFunctional {
    let dens = (0..n).map(|_| lagrangian(k, rng)).collect();
    Cylinder::new(SmoothScalarField::from_expr(n, smooth_expr(n, rng)), dens).expect("arity matches")
}

pub fn curve(k: usize, rng: &mut ChaCha8Rng) -> Curve {
    random_curve(k, rng)
}

/// A degree-`deg` 1-form on the plane.
pub fn poly_one_form(deg: u32, rng: &mut ChaCha8Rng) -> FormOnX {
    FormOnX::new(2, 1, vec![(vec![0], poly_expr(2, deg, rng)), (vec![1], poly_expr(2, deg, rng))], None)
        .expect("valid indices")
}

/// A 1-form on the plane with bump-supported smooth coefficients.
pub fn bump_one_form(center: &[f64], radius: f64, rng: &mut ChaCha8Rng) -> FormOnX {
    let b = make_bump(center, radius).expect("positive radius");
    let terms = vec![(vec![0], smooth_expr(2, rng) * b.expr()), (vec![1], smooth_expr(2, rng) * b.expr())];
    FormOnX::new(2, 1, terms, Some(Ball::new(center.to_vec(), radius))).expect("valid indices")
}

/// `Υ: ℝᵏ → ℝᵐ` with orthonormal columns from Gram–Schmidt on random vectors.
pub fn embedding(k: usize, m: usize, rng: &mut ChaCha8Rng) -> AffineEmbedding {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut c = point(m, 1.0, rng);
        for q in &cols {
            let d: f64 = c.iter().zip(q).map(|(a, b)| a * b).sum();
            c.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let n = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 {
            cols.push(c.into_iter().map(|a| a / n).collect());
        }
    }
    // one more pass keeps the columns orthonormal to rounding
    for i in 0..k {
        for j in 0..i {
            let d: f64 = (0..m).map(|r| cols[i][r] * cols[j][r]).sum();
            for r in 0..m {
                cols[i][r] -= d * cols[j][r];
            }
        }
        let n = cols[i].iter().map(|a| a * a).sum::<f64>().sqrt();
        cols[i].iter_mut().for_each(|a| *a /= n);
    }
    let rows = (0..m).map(|r| (0..k).map(|c| cols[c][r]).collect()).collect();
    AffineEmbedding::new(rows, point(m, 0.5, rng), Some(1.5)).expect("orthonormal columns")
}
