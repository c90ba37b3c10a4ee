use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{check_dim, invalid, Result};
use crate::expr::{Expr, Tape};
use crate::smooth::field::{join, meet, Ball, SmoothScalarField, SmoothVectorField};

/// A differential k-form `Σ_I a_I dx_I` on `ℝᵐ`, indexed by strictly
/// increasing multi-indices.
#[derive(Clone)]
pub struct FormOnX {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
    support: Option<Ball>,
    tape: Arc<OnceLock<(Vec<Vec<usize>>, Tape)>>,
}

/// Sorts `idx` in place, returning the permutation sign, or `None` on a repeat.
fn sort_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

pub(crate) fn determinant(rows: usize, entries: impl Fn(usize, usize) -> f64) -> f64 {
    match rows {
        0 => 1.0,
        1 => entries(0, 0),
        2 => entries(0, 0) * entries(1, 1) - entries(0, 1) * entries(1, 0),
        n => DMatrix::from_fn(n, n, entries).determinant(),
    }
}

impl FormOnX {
    /// Builds a form from `(multi-index, coefficient)` terms; indices need not
    /// be sorted and repeated indices drop the term.
    pub fn new(
        dim: usize,
        degree: usize,
        terms: Vec<(Vec<usize>, Expr)>,
        support: Option<Ball>,
    ) -> Result<Self> {
        if degree > dim {
            return Err(invalid(format!("form degree {degree} exceeds dimension {dim}")));
        }
        let mut coeffs: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
        for (mut idx, c) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= dim) {
                return Err(invalid(format!("bad multi-index {idx:?} for a {degree}-form on R^{dim}")));
            }
            let Some(sign) = sort_sign(&mut idx) else { continue };
            let c = c * sign;
            let e = match coeffs.remove(&idx) {
                Some(prev) => prev + c,
                None => c,
            };
            if !e.is_zero() {
                coeffs.insert(idx, e);
            }
        }
        Ok(Self::from_parts(dim, degree, coeffs, support))
    }

    fn from_parts(
        dim: usize,
        degree: usize,
        mut coeffs: BTreeMap<Vec<usize>, Expr>,
        support: Option<Ball>,
    ) -> Self {
        coeffs.retain(|_, c| !c.is_zero());
        FormOnX { dim, degree, coeffs, support, tape: Arc::new(OnceLock::new()) }
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Self::from_parts(dim, degree, BTreeMap::new(), Some(Ball::new(vec![0.0; dim], f64::MIN_POSITIVE)))
    }

    /// A function viewed as a 0-form.
    pub fn function(f: &SmoothScalarField) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(Vec::new(), f.expr().clone());
        Self::from_parts(f.dim(), 0, coeffs, f.support().cloned())
    }

    /// `a dx_{i_1} ∧ … ∧ dx_{i_k}` with coefficient field `a`.
    pub fn monomial(a: &SmoothScalarField, idx: &[usize]) -> Result<Self> {
        Self::new(a.dim(), idx.len(), vec![(idx.to_vec(), a.expr().clone())], a.support().cloned())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn support(&self) -> Option<&Ball> {
        self.support.as_ref()
    }

    pub fn with_support(mut self, support: Option<Ball>) -> Self {
        self.support = support;
        self
    }

    pub fn coefficient(&self, idx: &[usize]) -> SmoothScalarField {
        let e = self.coeffs.get(idx).cloned().unwrap_or_else(Expr::zero);
        SmoothScalarField::with_support(self.dim, e, self.support.clone())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total polynomial degree of the coefficients, when all are polynomial.
    pub fn polynomial_degree(&self) -> Option<u32> {
        self.coeffs.values().try_fold(0, |acc, c| Some(acc.max(c.polynomial_degree()?)))
    }

    pub(crate) fn compiled(&self) -> &(Vec<Vec<usize>>, Tape) {
        self.tape.get_or_init(|| {
            let idx: Vec<Vec<usize>> = self.coeffs.keys().cloned().collect();
            let exprs: Vec<Expr> = self.coeffs.values().cloned().collect();
            (idx, Tape::compile(&exprs))
        })
    }

    /// Coefficient values at `x`, in multi-index order.
    pub fn coefficients_at(&self, x: &[f64]) -> (Vec<Vec<usize>>, Vec<f64>) {
        let (idx, tape) = self.compiled();
        (idx.clone(), tape.eval(x))
    }

    /// `Σ_I a_I(x) · det(minor of the vectors on the rows I)`.
    pub fn eval(&self, x: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
        check_dim("form argument count", self.degree, vectors.len())?;
        check_dim("form base point", self.dim, x.len())?;
        for v in vectors {
            check_dim("form argument", self.dim, v.len())?;
        }
        Ok(self.eval_unchecked(x, vectors))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], vectors: &[Vec<f64>]) -> f64 {
        let (idx, tape) = self.compiled();
        idx.iter()
            .zip(tape.eval(x))
            .map(|(i, a)| a * determinant(self.degree, |r, c| vectors[c][i[r]]))
            .sum()
    }

    pub fn add(&self, other: &FormOnX) -> Result<FormOnX> {
        check_dim("form sum dimension", self.dim, other.dim)?;
        check_dim("form sum degree", self.degree, other.degree)?;
        let mut coeffs = self.coeffs.clone();
        for (i, c) in &other.coeffs {
            let e = match coeffs.remove(i) {
                Some(p) => p + c,
                None => c.clone(),
            };
            coeffs.insert(i.clone(), e);
        }
        Ok(Self::from_parts(self.dim, self.degree, coeffs, join(&self.support, &other.support)))
    }

    pub fn scale(&self, c: f64) -> FormOnX {
        let coeffs = self.coeffs.iter().map(|(i, e)| (i.clone(), e * c)).collect();
        Self::from_parts(self.dim, self.degree, coeffs, self.support.clone())
    }

    /// `f · ω` for a scalar field `f`.
    pub fn mul_function(&self, f: &SmoothScalarField) -> Result<FormOnX> {
        check_dim("form times function", self.dim, f.dim())?;
        let coeffs = self.coeffs.iter().map(|(i, e)| (i.clone(), e * f.expr())).collect();
        Ok(Self::from_parts(self.dim, self.degree, coeffs, meet(&self.support, &f.support().cloned())))
    }

    pub fn wedge(&self, other: &FormOnX) -> Result<FormOnX> {
        check_dim("wedge dimension", self.dim, other.dim)?;
        if self.degree + other.degree > self.dim {
            return Ok(Self::zero(self.dim, self.degree + other.degree));
        }
        let mut terms = Vec::new();
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let idx: Vec<usize> = i.iter().chain(j).copied().collect();
                terms.push((idx, a * b));
            }
        }
        let f = Self::new(self.dim, self.degree + other.degree, terms, None)?;
        Ok(f.with_support(meet(&self.support, &other.support)))
    }

    /// Exterior derivative; requires `degree < dim`.
    pub fn exterior_d(&self) -> Result<FormOnX> {
        if self.degree >= self.dim {
            return Err(invalid(format!(
                "exterior derivative of a top-degree ({}) form on R^{}",
                self.degree, self.dim
            )));
        }
        Ok(self.d_unchecked())
    }

    fn d_unchecked(&self) -> FormOnX {
        if self.degree >= self.dim {
            return Self::zero(self.dim, self.degree + 1);
        }
        let mut terms = Vec::new();
        for (i, a) in &self.coeffs {
            for j in 0..self.dim {
                if i.contains(&j) {
                    continue;
                }
                let da = a.diff(j);
                if da.is_zero() {
                    continue;
                }
                let mut idx = vec![j];
                idx.extend_from_slice(i);
                terms.push((idx, da));
            }
        }
        Self::new(self.dim, self.degree + 1, terms, None)
            .expect("valid indices")
            .with_support(self.support.clone())
    }

    /// Interior product `i_v ω`, with `(i_vω)(u_2..u_k) = ω(v, u_2..u_k)`.
    pub fn contract(&self, v: &SmoothVectorField) -> Result<FormOnX> {
        check_dim("interior product", self.dim, v.dim())?;
        if self.degree == 0 {
            return Ok(Self::zero(self.dim, 0));
        }
        let vc = v.components();
        let mut terms = Vec::new();
        for (i, a) in &self.coeffs {
            for p in 0..i.len() {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = i.clone();
                let k = rest.remove(p);
                terms.push((rest, a * &vc[k] * sign));
            }
        }
        let f = Self::new(self.dim, self.degree - 1, terms, None)?;
        Ok(f.with_support(meet(&self.support, &v.support().cloned())))
    }

    /// Lie derivative by Cartan's formula `d_vω = i_v dω + d(i_v ω)`.
    pub fn lie_derivative(&self, v: &SmoothVectorField) -> Result<FormOnX> {
        check_dim("lie derivative", self.dim, v.dim())?;
        let first = if self.degree < self.dim {
            self.d_unchecked().contract(v)?
        } else {
            Self::zero(self.dim, self.degree)
        };
        let second = if self.degree > 0 {
            self.contract(v)?.d_unchecked()
        } else {
            Self::zero(self.dim, 0)
        };
        let sum = first.add(&second)?;
        Ok(sum.with_support(meet(&self.support, &v.support().cloned())))
    }

    /// Pullback along `x' ↦ A x' + b` (`A` is `m × m'`, row-major).
    pub fn pullback_affine(&self, a: &[Vec<f64>], b: &[f64]) -> Result<FormOnX> {
        check_dim("pullback target", self.dim, b.len())?;
        let m_src = a.first().map_or(0, |r| r.len());
        if self.degree > m_src {
            return Ok(Self::zero(m_src, self.degree));
        }
        let subs: Vec<Expr> = (0..self.dim)
            .map(|i| Expr::sum((0..m_src).map(|j| Expr::var(j) * a[i][j])) + b[i])
            .collect();
        let mut terms = Vec::new();
        for (i, c) in &self.coeffs {
            let c = c.substitute(&subs);
            // dx_{i_1}∧…∧dx_{i_k} pulls back to Σ_J det(A[I, J]) dx'_J
            for jdx in increasing_indices(m_src, self.degree) {
                let det = determinant(self.degree, |r, s| a[i[r]][jdx[s]]);
                if det != 0.0 {
                    terms.push((jdx.clone(), &c * det));
                }
            }
        }
        Self::new(m_src, self.degree, terms, None)
    }
}

/// All strictly increasing multi-indices of length `k` from `0..m`.
pub fn increasing_indices(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

impl fmt::Debug for FormOnX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FormOnX(deg {} on R^{}:", self.degree, self.dim)?;
        for i in self.coeffs.keys() {
            write!(f, " dx{i:?}")?;
        }
        write!(f, ")")
    }
}

/// Evaluates `ω` at `x` on a k-tuple of vectors.
pub fn eval_form_on_x(omega: &FormOnX, x: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
    omega.eval(x, vectors)
}

pub fn exterior_d_on_x(omega: &FormOnX) -> Result<FormOnX> {
    omega.exterior_d()
}

pub fn lie_derivative_form_on_x(v: &SmoothVectorField, omega: &FormOnX) -> Result<FormOnX> {
    omega.lie_derivative(v)
}
