//! Case groups per suite, plus law checks shared across geometries.

pub mod curve;
pub mod geometry;
pub mod mapping;
pub mod measure;
pub mod smooth;
pub mod submanifold;

use lifted_core::geometry::{bracket_closure_residual, leibniz_residual, DerivationHandle, Geometry};
use lifted_core::smooth::SmoothVectorField;
use lifted_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gen;
use crate::harness::rel_scale;

/// A geometry whose derivations are lifted vector fields on `ℝᵐ`, with a
/// sampler for its functions.
pub trait Sampled: Geometry<Generator = SmoothVectorField> {
    fn base_dim(&self) -> usize;

    fn element(&self, rng: &mut ChaCha8Rng) -> Self::Element;

    fn field(&self, rng: &mut ChaCha8Rng) -> SmoothVectorField {
        gen::liftable_field(self.base_dim(), rng)
    }

    /// A basic derivation, or `a₁α₁ + a₂α₂` with random coefficients.
    fn derivation(&self, rng: &mut ChaCha8Rng) -> DerivationHandle<Self>
    where
        Self: Sized,
    {
        if rng.random_bool(0.5) {
            DerivationHandle::Basic(self.field(rng))
        } else {
            DerivationHandle::Combination((0..2).map(|_| (self.element(rng), self.field(rng))).collect())
        }
    }
}

/// `|β(ab) − β(a)b − aβ(b)|`, relative.
pub fn leibniz<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let beta = geom.derivation(rng);
    let (a, b) = (geom.element(rng), geom.element(rng));
    let p = geom.sample_point(rng);
    let (res, scale) = leibniz_residual(geom, &beta, &a, &b, &p)?;
    Ok(rel_scale(res, scale))
}

/// `|d̃_{sv+tw}F − s·d̃_vF − t·d̃_wF|`, relative.
pub fn linearity<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (v, w) = (geom.field(rng), geom.field(rng));
    let (s, t) = (gen::coef(rng) * 2.0, gen::coef(rng) * 2.0);
    let f = geom.element(rng);
    let p = geom.sample_point(rng);
    let combo = v.scale(s).add(&w.scale(t))?;
    let lhs = geom.eval(&geom.derive(&combo, &f)?, &p)?;
    let dv = geom.eval(&geom.derive(&v, &f)?, &p)?;
    let dw = geom.eval(&geom.derive(&w, &f)?, &p)?;
    let scale = lhs.abs().max((s * dv).abs()).max((t * dw).abs());
    Ok(rel_scale((lhs - s * dv - t * dw).abs(), scale))
}

/// `|(d̃_vd̃_w − d̃_wd̃_v)F − d̃_{[v,w]}F|`, relative.
pub fn lie_compat<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (v, w) = (geom.field(rng), geom.field(rng));
    let f = geom.element(rng);
    let p = geom.sample_point(rng);
    let (res, scale) = bracket_closure_residual(geom, &v, &w, &f, &p)?;
    Ok(rel_scale(res, scale))
}
