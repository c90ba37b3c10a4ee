//! Geometries `(A, D)` over sampled point sets: derivations, the module `D̄`
//! they generate, and formal differential forms `Σ a₀ da₁∧…∧daₙ`.
//!
//! A form is evaluated on derivations through the determinant
//! `Σ a₀(p) · det[αᵢ(aⱼ)(p)]`, which is the wedge product normalized by
//! `(k+l)!/(k!l!) · Alt`. Form equality is decided by evaluation on probes.

mod classical;
mod forms;

pub use classical::ClassicalGeometry;
pub use forms::{
    cartan_check, eval_form, exterior_d, interior_product, lie_derivative, pushforward_check,
    pushforward_forms, wedge, degeneracy_residual, eval_form_scaled, CartanReport, Form, FormTerm, Morphism, Probe,
    PushforwardReport,
};

use rand::RngCore;

use crate::error::Result;

/// A concrete geometry on a point set.
pub trait Geometry: Sync {
    type Point: Clone + Send + Sync;
    type Element: Clone + Send + Sync;
    /// Labels of the basic derivations (vector fields on the base space).
    type Generator: Clone + Send + Sync;

    fn sample_point(&self, rng: &mut dyn RngCore) -> Self::Point;

    fn eval(&self, a: &Self::Element, p: &Self::Point) -> Result<f64>;

    fn constant(&self, c: f64) -> Self::Element;

    fn add(&self, a: &Self::Element, b: &Self::Element) -> Result<Self::Element>;

    fn mul(&self, a: &Self::Element, b: &Self::Element) -> Result<Self::Element>;

    fn scale(&self, c: f64, a: &Self::Element) -> Self::Element;

    /// The basic derivation labelled `g` applied to `a`.
    fn derive(&self, g: &Self::Generator, a: &Self::Element) -> Result<Self::Element>;

    /// Label of the commutator of two basic derivations.
    fn bracket(&self, g: &Self::Generator, h: &Self::Generator) -> Result<Self::Generator>;
}

/// An element of `D̄`: a basic derivation or a finite `Σ aᵢ αᵢ`.
#[derive(Clone)]
pub enum DerivationHandle<G: Geometry> {
    Basic(G::Generator),
    Combination(Vec<(G::Element, G::Generator)>),
}

impl<G: Geometry> DerivationHandle<G> {
    pub fn zero() -> Self {
        DerivationHandle::Combination(Vec::new())
    }

    fn pairs(&self, geom: &G) -> Vec<(G::Element, G::Generator)> {
        match self {
            DerivationHandle::Basic(g) => vec![(geom.constant(1.0), g.clone())],
            DerivationHandle::Combination(terms) => terms.clone(),
        }
    }

    /// `β(a)` as an algebra element.
    pub fn apply(&self, geom: &G, a: &G::Element) -> Result<G::Element> {
        match self {
            DerivationHandle::Basic(g) => geom.derive(g, a),
            DerivationHandle::Combination(terms) => {
                let mut acc = geom.constant(0.0);
                for (c, g) in terms {
                    acc = geom.add(&acc, &geom.mul(c, &geom.derive(g, a)?)?)?;
                }
                Ok(acc)
            }
        }
    }

    /// `β(a)(p)`, evaluated term by term.
    pub fn apply_at(&self, geom: &G, a: &G::Element, p: &G::Point) -> Result<f64> {
        match self {
            DerivationHandle::Basic(g) => geom.eval(&geom.derive(g, a)?, p),
            DerivationHandle::Combination(terms) => {
                let mut acc = 0.0;
                for (c, g) in terms {
                    acc += geom.eval(c, p)? * geom.eval(&geom.derive(g, a)?, p)?;
                }
                Ok(acc)
            }
        }
    }

    /// `[Σ aᵢαᵢ, Σ bⱼβⱼ] = Σ aᵢbⱼ[αᵢ,βⱼ] + Σ aᵢαᵢ(bⱼ)βⱼ − Σ bⱼβⱼ(aᵢ)αᵢ`.
    pub fn bracket(&self, other: &Self, geom: &G) -> Result<Self> {
        if let (DerivationHandle::Basic(g), DerivationHandle::Basic(h)) = (self, other) {
            return Ok(DerivationHandle::Basic(geom.bracket(g, h)?));
        }
        let lhs = self.pairs(geom);
        let rhs = other.pairs(geom);
        let mut out = Vec::new();
        for (a, g) in &lhs {
            for (b, h) in &rhs {
                out.push((geom.mul(a, b)?, geom.bracket(g, h)?));
                out.push((geom.mul(a, &geom.derive(g, b)?)?, h.clone()));
                out.push((geom.scale(-1.0, &geom.mul(b, &geom.derive(h, a)?)?), g.clone()));
            }
        }
        Ok(DerivationHandle::Combination(out))
    }
}

/// `(αβ − βα)(a) − d̃_{[g,h]}(a)` at `p`, with its scale.
pub fn bracket_closure_residual<G: Geometry>(
    geom: &G,
    g: &G::Generator,
    h: &G::Generator,
    a: &G::Element,
    p: &G::Point,
) -> Result<(f64, f64)> {
    let gh = geom.eval(&geom.derive(g, &geom.derive(h, a)?)?, p)?;
    let hg = geom.eval(&geom.derive(h, &geom.derive(g, a)?)?, p)?;
    let br = geom.eval(&geom.derive(&geom.bracket(g, h)?, a)?, p)?;
    Ok(((gh - hg - br).abs(), gh.abs().max(hg.abs()).max(br.abs())))
}

/// Leibniz residual `|β(ab) − β(a)b − aβ(b)|` at `p`, with its scale.
pub fn leibniz_residual<G: Geometry>(
    geom: &G,
    beta: &DerivationHandle<G>,
    a: &G::Element,
    b: &G::Element,
    p: &G::Point,
) -> Result<(f64, f64)> {
    let lhs = beta.apply_at(geom, &geom.mul(a, b)?, p)?;
    let t1 = beta.apply_at(geom, a, p)? * geom.eval(b, p)?;
    let t2 = geom.eval(a, p)? * beta.apply_at(geom, b, p)?;
    Ok(((lhs - t1 - t2).abs(), lhs.abs().max(t1.abs()).max(t2.abs())))
}

/// One-sided test that `α` and `β` define the same tangent vector at `p`:
/// `|(αa)(p) − (βa)(p)| ≤ 1e-9 · scale` for every probe element.
pub fn tangent_equal_probe<G: Geometry>(
    geom: &G,
    p: &G::Point,
    alpha: &DerivationHandle<G>,
    beta: &DerivationHandle<G>,
    probes: &[G::Element],
) -> Result<(bool, f64)> {
    let mut equal = true;
    let mut worst: f64 = 0.0;
    for a in probes {
        let x = alpha.apply_at(geom, a, p)?;
        let y = beta.apply_at(geom, a, p)?;
        let dev = (x - y).abs();
        worst = worst.max(dev);
        if dev > 1e-9 * x.abs().max(y.abs()).max(1.0) {
            equal = false;
        }
    }
    Ok((equal, worst))
}
