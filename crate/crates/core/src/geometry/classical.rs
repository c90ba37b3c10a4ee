use rand::{Rng, RngCore};

use crate::error::{check_dim, Result};
use crate::geometry::Geometry;
use crate::smooth::{directional_derivative_scalar, lie_bracket, SmoothScalarField, SmoothVectorField};

/// `(C^∞(ℝᵐ), Vec(ℝᵐ))` with points sampled uniformly from `[−r, r]ᵐ`.
#[derive(Clone, Debug)]
pub struct ClassicalGeometry {
    dim: usize,
    sample_radius: f64,
}

impl ClassicalGeometry {
    pub fn new(dim: usize, sample_radius: f64) -> Self {
        ClassicalGeometry { dim, sample_radius }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Geometry for ClassicalGeometry {
    type Point = Vec<f64>;
    type Element = SmoothScalarField;
    type Generator = SmoothVectorField;

    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let r = self.sample_radius;
        (0..self.dim).map(|_| rng.random_range(-r..=r)).collect()
    }

    fn eval(&self, a: &SmoothScalarField, p: &Vec<f64>) -> Result<f64> {
        check_dim("point", self.dim, p.len())?;
        check_dim("function", self.dim, a.dim())?;
        Ok(a.eval(p))
    }

    fn constant(&self, c: f64) -> SmoothScalarField {
        SmoothScalarField::constant(self.dim, c)
    }

    fn add(&self, a: &SmoothScalarField, b: &SmoothScalarField) -> Result<SmoothScalarField> {
        a.add(b)
    }

    fn mul(&self, a: &SmoothScalarField, b: &SmoothScalarField) -> Result<SmoothScalarField> {
        a.mul(b)
    }

    fn scale(&self, c: f64, a: &SmoothScalarField) -> SmoothScalarField {
        a.scale(c)
    }

    fn derive(&self, g: &SmoothVectorField, a: &SmoothScalarField) -> Result<SmoothScalarField> {
        directional_derivative_scalar(g, a)
    }

    fn bracket(&self, g: &SmoothVectorField, h: &SmoothVectorField) -> Result<SmoothVectorField> {
        lie_bracket(g, h)
    }
}
