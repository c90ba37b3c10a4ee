//! Exterior-algebra laws over an abstract geometry. Each case draws either the
//! classical geometry of `ℝᵐ` or the lifted geometry on particle measures.

use lifted_core::geometry::{
    bracket_closure_residual, cartan_check, degeneracy_residual, eval_form_scaled, exterior_d, interior_product,
    wedge, ClassicalGeometry, DerivationHandle, Form, Probe,
};
use lifted_core::measure::MeasureGeometry;
use lifted_core::smooth::SmoothScalarField;
use lifted_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{leibniz, linearity, Sampled};
use crate::config::Params;
use crate::gen::{self, point, smooth_expr};
use crate::harness::{rel_scale, Group, Outcome};

impl Sampled for ClassicalGeometry {
    fn base_dim(&self) -> usize {
        self.dim()
    }

    fn element(&self, rng: &mut ChaCha8Rng) -> SmoothScalarField {
        SmoothScalarField::from_expr(self.dim(), smooth_expr(self.dim(), rng))
    }
}

impl Sampled for MeasureGeometry {
    fn base_dim(&self) -> usize {
        self.dim()
    }

    fn element(&self, rng: &mut ChaCha8Rng) -> lifted_core::measure::CylinderFunctionM {
        gen::measure_function(self.dim(), 2, rng)
    }
}

macro_rules! either_geometry {
    ($check:ident) => {
        |rng: &mut ChaCha8Rng, p: &Params| -> Result<Outcome> {
            let m = gen::dim(p, rng);
            let r = if rng.random_bool(0.5) {
                $check(&ClassicalGeometry::new(m, 1.5), rng)?
            } else {
                $check(&MeasureGeometry::new(m, 4, 1.0), rng)?
            };
            Ok(Outcome::Residual(r))
        }
    };
}

const FORM_ANCHOR: &str = "the exterior derivative d and the wedge product on forms";

pub fn groups() -> Vec<Group> {
    vec![
        Group {
            name: "d-squared",
            desc: "d∘d = 0 on a 1-form, evaluated on three derivations",
            anchor: FORM_ANCHOR,
            count: 32,
            tolerance: 1e-8,
            run: either_geometry!(d_squared),
        },
        Group {
            name: "graded-leibniz",
            desc: "d(ω∧η) = dω∧η − ω∧dη for 1-forms",
            anchor: FORM_ANCHOR,
            count: 32,
            tolerance: 1e-8,
            run: either_geometry!(graded_leibniz),
        },
        Group {
            name: "wedge-anticommute",
            desc: "ω∧η = −η∧ω for 1-forms",
            anchor: FORM_ANCHOR,
            count: 32,
            tolerance: 1e-8,
            run: either_geometry!(wedge_anticommute),
        },
        Group {
            name: "cartan-magic",
            desc: "d_α = i_α d + d i_α on 1- and 2-forms",
            anchor: "Cartan's formula d_α = i_α d + d i_α",
            count: 32,
            tolerance: 1e-8,
            run: either_geometry!(cartan_magic),
        },
        Group {
            name: "interior-bracket",
            desc: "i_{[α,β]} = d_α i_β − i_β d_α on 2-forms",
            anchor: "i_{[α,β]} = d_α i_β − i_β d_α",
            count: 32,
            tolerance: 1e-8,
            run: either_geometry!(interior_bracket),
        },
        Group {
            name: "degeneracy",
            desc: "(r+1)-forms vanish on derivations spanned by r basic ones",
            anchor: "forms of degree larger than the dimension vanish",
            count: 32,
            tolerance: 1e-12,
            run: either_geometry!(degeneracy),
        },
        Group {
            name: "bracket-closure",
            desc: "commutator of basic derivations is the derivation of the Lie bracket",
            anchor: "we have showed that any function",
            count: 32,
            tolerance: 1e-8,
            run: either_geometry!(bracket_closure),
        },
        Group {
            name: "leibniz",
            desc: "β(ab) = β(a)b + aβ(b) for basic and combined derivations",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: either_geometry!(leibniz),
        },
        Group {
            name: "linearity",
            desc: "d̃_{sv+tw} = s·d̃_v + t·d̃_w",
            anchor: "smooth, linear-derivable and Lie-compatible",
            count: 50,
            tolerance: 1e-9,
            run: either_geometry!(linearity),
        },
    ]
}

fn one_form<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Form<G::Element> {
    Form::monomial(geom.element(rng), vec![geom.element(rng)])
}

fn args<G: Sampled>(geom: &G, k: usize, rng: &mut ChaCha8Rng) -> Vec<DerivationHandle<G>> {
    (0..k).map(|_| geom.derivation(rng)).collect()
}

/// `|value(lhs) − value(rhs)|` relative to the larger term sum.
fn compare<G: Sampled>(
    geom: &G,
    lhs: &Form<G::Element>,
    rhs: &Form<G::Element>,
    p: &G::Point,
    args: &[DerivationHandle<G>],
) -> Result<f64> {
    let (l, ls) = eval_form_scaled(geom, lhs, p, args)?;
    let (r, rs) = eval_form_scaled(geom, rhs, p, args)?;
    Ok(rel_scale((l - r).abs(), ls.max(rs)))
}

fn d_squared<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let omega = one_form(geom, rng);
    let a = args(geom, 3, rng);
    let p = geom.sample_point(rng);
    let dd = exterior_d(geom, &exterior_d(geom, &omega));
    let (v, s) = eval_form_scaled(geom, &dd, &p, &a)?;
    Ok(rel_scale(v.abs(), s))
}

fn graded_leibniz<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (omega, eta) = (one_form(geom, rng), one_form(geom, rng));
    let a = args(geom, 3, rng);
    let p = geom.sample_point(rng);
    let lhs = exterior_d(geom, &wedge(geom, &omega, &eta)?);
    let rhs = wedge(geom, &exterior_d(geom, &omega), &eta)?
        .add(&wedge(geom, &omega, &exterior_d(geom, &eta))?.scale(geom, -1.0))?;
    compare(geom, &lhs, &rhs, &p, &a)
}

fn wedge_anticommute<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (omega, eta) = (one_form(geom, rng), one_form(geom, rng));
    let a = args(geom, 2, rng);
    let p = geom.sample_point(rng);
    let lhs = wedge(geom, &omega, &eta)?;
    let rhs = wedge(geom, &eta, &omega)?.scale(geom, -1.0);
    compare(geom, &lhs, &rhs, &p, &a)
}

/// A 1-form or a 2-form `a₀ da₁∧da₂`.
fn low_form<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Form<G::Element> {
    if rng.random_bool(0.5) {
        one_form(geom, rng)
    } else {
        Form::monomial(geom.element(rng), vec![geom.element(rng), geom.element(rng)])
    }
}

fn cartan_magic<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let omega = low_form(geom, rng);
    let (alpha, beta) = (geom.derivation(rng), geom.derivation(rng));
    let probes = vec![Probe { point: geom.sample_point(rng), args: args(geom, omega.degree(), rng) }];
    let rep = cartan_check(geom, &alpha, &beta, &omega, &probes)?;
    Ok(rel_scale(rep.magic, rep.scale))
}

fn interior_bracket<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let omega = Form::monomial(geom.element(rng), vec![geom.element(rng), geom.element(rng)]);
    let (alpha, beta) = (geom.derivation(rng), geom.derivation(rng));
    let p = geom.sample_point(rng);
    let a = args(geom, 1, rng);
    // i_{[α,β]}ω against d_α(i_βω) − i_β(d_αω), assembled independently of cartan_check
    let ab = alpha.bracket(&beta, geom)?;
    let lhs = interior_product(geom, &ab, &omega)?;
    let rhs = lifted_core::geometry::lie_derivative(geom, &alpha, &interior_product(geom, &beta, &omega)?)?
        .add(&interior_product(geom, &beta, &lifted_core::geometry::lie_derivative(geom, &alpha, &omega)?)?.scale(geom, -1.0))?;
    compare(geom, &lhs, &rhs, &p, &a)
}

fn degeneracy<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let r = rng.random_range(1..=3);
    let elems: Vec<_> = (0..=r).map(|_| geom.element(rng)).collect();
    let gens: Vec<_> = (0..r).map(|_| geom.field(rng)).collect();
    let coeffs: Vec<Vec<f64>> = (0..=r).map(|_| point(r, 1.0, rng)).collect();
    let p = geom.sample_point(rng);
    let (v, s) = degeneracy_residual(geom, &elems, &gens, &coeffs, &p)?;
    Ok(rel_scale(v.abs(), s))
}

fn bracket_closure<G: Sampled>(geom: &G, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (v, w) = (geom.field(rng), geom.field(rng));
    let a = geom.element(rng);
    let p = geom.sample_point(rng);
    let (res, scale) = bracket_closure_residual(geom, &v, &w, &a, &p)?;
    Ok(rel_scale(res, scale))
}
