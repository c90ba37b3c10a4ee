use crate::error::{check_dim, LiftedError, Result};
use crate::geometry::{DerivationHandle, Geometry};
use crate::smooth::form::determinant;

/// One generated term `a₀ da₁∧…∧daₙ`.
#[derive(Clone)]
pub struct FormTerm<E> {
    pub coeff: E,
    pub diffs: Vec<E>,
}

/// A formal form `Σ a₀ʲ da₁ʲ∧…∧daₙʲ` of fixed degree.
#[derive(Clone)]
pub struct Form<E> {
    degree: usize,
    terms: Vec<FormTerm<E>>,
}

impl<E: Clone> Form<E> {
    pub fn zero(degree: usize) -> Self {
        Form { degree, terms: Vec::new() }
    }

    /// The 0-form `a`.
    pub fn function(a: E) -> Self {
        Form { degree: 0, terms: vec![FormTerm { coeff: a, diffs: Vec::new() }] }
    }

    /// `a₀ da₁∧…∧daₙ`.
    pub fn monomial(coeff: E, diffs: Vec<E>) -> Self {
        Form { degree: diffs.len(), terms: vec![FormTerm { coeff, diffs }] }
    }

    pub fn from_terms(degree: usize, terms: Vec<FormTerm<E>>) -> Result<Self> {
        for t in &terms {
            check_dim("form term degree", degree, t.diffs.len())?;
        }
        Ok(Form { degree, terms })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[FormTerm<E>] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim("form sum degree", self.degree, other.degree)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Form { degree: self.degree, terms })
    }
}

impl<E: Clone> Form<E> {
    pub fn scale<G: Geometry<Element = E>>(&self, geom: &G, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| FormTerm { coeff: geom.scale(c, &t.coeff), diffs: t.diffs.clone() })
            .collect();
        Form { degree: self.degree, terms }
    }

    /// `da` as a 1-form.
    pub fn exact<G: Geometry<Element = E>>(geom: &G, a: E) -> Self {
        Form::monomial(geom.constant(1.0), vec![a])
    }
}

/// A sample point with a tuple of derivation arguments.
#[derive(Clone)]
pub struct Probe<G: Geometry> {
    pub point: G::Point,
    pub args: Vec<DerivationHandle<G>>,
}

/// `Σ a₀(p) · det[αᵢ(aⱼ)(p)]` together with `Σ |a₀(p) · det[…]|` as a scale.
pub fn eval_form_scaled<G: Geometry>(
    geom: &G,
    omega: &Form<G::Element>,
    p: &G::Point,
    args: &[DerivationHandle<G>],
) -> Result<(f64, f64)> {
    check_dim("form arguments", omega.degree, args.len())?;
    let n = omega.degree;
    let mut value = 0.0;
    let mut scale = 0.0;
    for t in &omega.terms {
        let a0 = geom.eval(&t.coeff, p)?;
        if a0 == 0.0 {
            continue;
        }
        let mut m = vec![0.0; n * n];
        for (i, alpha) in args.iter().enumerate() {
            for (j, a) in t.diffs.iter().enumerate() {
                m[i * n + j] = alpha.apply_at(geom, a, p)?;
            }
        }
        let v = a0 * determinant(n, |i, j| m[i * n + j]);
        value += v;
        scale += v.abs();
    }
    Ok((value, scale))
}

pub fn eval_form<G: Geometry>(
    geom: &G,
    omega: &Form<G::Element>,
    p: &G::Point,
    args: &[DerivationHandle<G>],
) -> Result<f64> {
    Ok(eval_form_scaled(geom, omega, p, args)?.0)
}

/// `(a₀T) ∧ (b₀U) = a₀b₀ T∧U`.
pub fn wedge<G: Geometry>(
    geom: &G,
    omega: &Form<G::Element>,
    eta: &Form<G::Element>,
) -> Result<Form<G::Element>> {
    let mut terms = Vec::with_capacity(omega.terms.len() * eta.terms.len());
    for s in &omega.terms {
        for t in &eta.terms {
            let mut diffs = s.diffs.clone();
            diffs.extend(t.diffs.iter().cloned());
            terms.push(FormTerm { coeff: geom.mul(&s.coeff, &t.coeff)?, diffs });
        }
    }
    Ok(Form { degree: omega.degree + eta.degree, terms })
}

/// `d(a₀ da₁∧…∧daₙ) = da₀∧da₁∧…∧daₙ`.
pub fn exterior_d<G: Geometry>(geom: &G, omega: &Form<G::Element>) -> Form<G::Element> {
    let terms = omega
        .terms
        .iter()
        .map(|t| {
            let mut diffs = Vec::with_capacity(t.diffs.len() + 1);
            diffs.push(t.coeff.clone());
            diffs.extend(t.diffs.iter().cloned());
            FormTerm { coeff: geom.constant(1.0), diffs }
        })
        .collect();
    Form { degree: omega.degree + 1, terms }
}

/// Degree-zero graded derivation commuting with `d`, extending `a ↦ α(a)`.
pub fn lie_derivative<G: Geometry>(
    geom: &G,
    alpha: &DerivationHandle<G>,
    omega: &Form<G::Element>,
) -> Result<Form<G::Element>> {
    let mut terms = Vec::new();
    for t in &omega.terms {
        terms.push(FormTerm { coeff: alpha.apply(geom, &t.coeff)?, diffs: t.diffs.clone() });
        for i in 0..t.diffs.len() {
            let mut diffs = t.diffs.clone();
            diffs[i] = alpha.apply(geom, &t.diffs[i])?;
            terms.push(FormTerm { coeff: t.coeff.clone(), diffs });
        }
    }
    Ok(Form { degree: omega.degree, terms })
}

/// Degree `−1` graded derivation with `i_α(a) = 0`, `i_α(da) = α(a)`.
pub fn interior_product<G: Geometry>(
    geom: &G,
    alpha: &DerivationHandle<G>,
    omega: &Form<G::Element>,
) -> Result<Form<G::Element>> {
    if omega.degree == 0 {
        return Ok(Form::zero(0));
    }
    let mut terms = Vec::new();
    for t in &omega.terms {
        for i in 0..t.diffs.len() {
            let mut c = geom.mul(&t.coeff, &alpha.apply(geom, &t.diffs[i])?)?;
            if i % 2 == 1 {
                c = geom.scale(-1.0, &c);
            }
            let mut diffs = t.diffs.clone();
            diffs.remove(i);
            terms.push(FormTerm { coeff: c, diffs });
        }
    }
    Ok(Form { degree: omega.degree - 1, terms })
}

/// Residuals of `d_α = i_α d + d i_α` and `i_{[α,β]} = d_α i_β − i_β d_α`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CartanReport {
    pub magic: f64,
    pub bracket: f64,
    /// Largest magnitude seen among the evaluated sides.
    pub scale: f64,
}

impl CartanReport {
    pub fn max_residual(&self) -> f64 {
        self.magic.max(self.bracket)
    }

    pub fn relative(&self) -> f64 {
        self.max_residual() / self.scale.max(1.0)
    }
}

/// Evaluates both Cartan identities on every probe. Probes must carry at
/// least `deg ω` arguments; the bracket identity uses the first `deg ω − 1`.
pub fn cartan_check<G: Geometry>(
    geom: &G,
    alpha: &DerivationHandle<G>,
    beta: &DerivationHandle<G>,
    omega: &Form<G::Element>,
    probes: &[Probe<G>],
) -> Result<CartanReport> {
    let n = omega.degree;
    let lie = lie_derivative(geom, alpha, omega)?;
    let mut magic_rhs = interior_product(geom, alpha, &exterior_d(geom, omega))?;
    if n > 0 {
        magic_rhs = magic_rhs.add(&exterior_d(geom, &interior_product(geom, alpha, omega)?))?;
    }
    let ab = alpha.bracket(beta, geom)?;
    let (i_ab, ib_rhs) = if n > 0 {
        let i_ab = interior_product(geom, &ab, omega)?;
        let lhs = lie_derivative(geom, alpha, &interior_product(geom, beta, omega)?)?;
        let rhs = interior_product(geom, beta, &lie)?.scale(geom, -1.0);
        (Some(i_ab), Some(lhs.add(&rhs)?))
    } else {
        (None, None)
    };
    let mut rep = CartanReport::default();
    for probe in probes {
        if probe.args.len() < n {
            return Err(crate::error::invalid("probe has fewer arguments than the form degree"));
        }
        let args = &probe.args[..n];
        let (l, ls) = eval_form_scaled(geom, &lie, &probe.point, args)?;
        let (r, rs) = eval_form_scaled(geom, &magic_rhs, &probe.point, args)?;
        rep.magic = rep.magic.max((l - r).abs());
        rep.scale = rep.scale.max(ls).max(rs);
        if let (Some(x), Some(y)) = (&i_ab, &ib_rhs) {
            let args = &probe.args[..n - 1];
            let (l, ls) = eval_form_scaled(geom, x, &probe.point, args)?;
            let (r, rs) = eval_form_scaled(geom, y, &probe.point, args)?;
            rep.bracket = rep.bracket.max((l - r).abs());
            rep.scale = rep.scale.max(ls).max(rs);
        }
    }
    Ok(rep)
}

/// An algebra map `φ: A → A'` with an explicit derivation correspondence
/// `α' ↦ α` satisfying `α'(φ(a)) = φ(α(a))`.
pub trait Morphism<S: Geometry, T: Geometry> {
    fn map_element(&self, a: &S::Element) -> Result<T::Element>;

    /// The source derivation corresponding to a target generator.
    fn correspond(&self, g: &T::Generator) -> Result<S::Generator>;
}

/// `φ(a₀ da₁∧…∧daₙ) = φ(a₀) dφ(a₁)∧…∧dφ(aₙ)`.
pub fn pushforward_forms<S: Geometry, T: Geometry, M: Morphism<S, T> + ?Sized>(
    morphism: &M,
    omega: &Form<S::Element>,
) -> Result<Form<T::Element>> {
    let mut terms = Vec::with_capacity(omega.terms.len());
    for t in &omega.terms {
        let diffs = t.diffs.iter().map(|a| morphism.map_element(a)).collect::<Result<Vec<_>>>()?;
        terms.push(FormTerm { coeff: morphism.map_element(&t.coeff)?, diffs });
    }
    Ok(Form { degree: omega.degree, terms })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PushforwardReport {
    /// `|φ(dω) − d(φω)|` on target probes.
    pub commutation: f64,
    /// `|α'(φ(a)) − φ(α(a))|` over the form's algebra elements.
    pub correspondence: f64,
    pub scale: f64,
}

/// Checks `φ∘d = d∘φ` and the derivation correspondence on target probes
/// whose arguments are basic derivations.
pub fn pushforward_check<S: Geometry, T: Geometry, M: Morphism<S, T> + ?Sized>(
    src: &S,
    tgt: &T,
    morphism: &M,
    omega: &Form<S::Element>,
    probes: &[Probe<T>],
) -> Result<PushforwardReport> {
    let lhs = pushforward_forms(morphism, &exterior_d(src, omega))?;
    let rhs = exterior_d(tgt, &pushforward_forms(morphism, omega)?);
    let mut elems: Vec<&S::Element> = Vec::new();
    for t in &omega.terms {
        elems.push(&t.coeff);
        elems.extend(t.diffs.iter());
    }
    let mut rep = PushforwardReport::default();
    for probe in probes {
        let args = probe.args.get(..lhs.degree).ok_or_else(|| {
            crate::error::invalid("probe has fewer arguments than the form degree")
        })?;
        let (l, ls) = eval_form_scaled(tgt, &lhs, &probe.point, args)?;
        let (r, rs) = eval_form_scaled(tgt, &rhs, &probe.point, args)?;
        rep.commutation = rep.commutation.max((l - r).abs());
        rep.scale = rep.scale.max(ls).max(rs);
        for arg in &probe.args {
            let DerivationHandle::Basic(g) = arg else {
                return Err(LiftedError::Unsupported(
                    "correspondence is defined on basic derivations only".into(),
                ));
            };
            let alpha = morphism.correspond(g)?;
            for a in &elems {
                let x = tgt.eval(&tgt.derive(g, &morphism.map_element(a)?)?, &probe.point)?;
                let y = tgt.eval(&morphism.map_element(&src.derive(&alpha, a)?)?, &probe.point)?;
                rep.correspondence = rep.correspondence.max((x - y).abs());
                rep.scale = rep.scale.max(x.abs()).max(y.abs());
            }
        }
    }
    Ok(rep)
}

/// `da₀∧…∧da_r` evaluated on `r + 1` derivations drawn from the span of `r`
/// basic ones, `βᵢ = Σⱼ cᵢⱼ αⱼ`. Returns `(value, scale)`; the value must vanish.
pub fn degeneracy_residual<G: Geometry>(
    geom: &G,
    elems: &[G::Element],
    gens: &[G::Generator],
    coeffs: &[Vec<f64>],
    p: &G::Point,
) -> Result<(f64, f64)> {
    let r = gens.len();
    check_dim("degeneracy elements", r + 1, elems.len())?;
    check_dim("degeneracy coefficient rows", r + 1, coeffs.len())?;
    let args: Vec<DerivationHandle<G>> = coeffs
        .iter()
        .map(|row| {
            check_dim("degeneracy coefficient columns", r, row.len())?;
            Ok(DerivationHandle::Combination(
                row.iter().zip(gens).map(|(&c, g)| (geom.constant(c), g.clone())).collect(),
            ))
        })
        .collect::<Result<_>>()?;
    let omega = Form::monomial(geom.constant(1.0), elems.to_vec());
    // scale: product of row norms bounds |det| by Hadamard's inequality
    let mut scale = 1.0;
    for beta in &args {
        let mut s = 0.0;
        for a in elems {
            s += beta.apply_at(geom, a, p)?.powi(2);
        }
        scale *= s.sqrt();
    }
    Ok((eval_form(geom, &omega, p, &args)?, scale))
}
