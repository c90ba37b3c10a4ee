//! Functionals `F[φ: μ₁..μₙ](P) = ∫_{Yⁿ} φ(P,…,P) d(μ₁×…×μₙ)` on mappings
//! `P: Y → ℝᵐ` from a finite measure space `Y`.

use rand::{Rng, RngCore};

use crate::cylinder::require_liftable;
use crate::error::{check_dim, invalid, LiftedError, Result};
use crate::expr::Expr;
use crate::geometry::Geometry;
use crate::smooth::{lie_bracket, AffineEmbedding, Diffeo, SmoothScalarField, SmoothVectorField};

/// A finite set `{y₁..y_N}` with the power-set σ-algebra and a family `𝒴` of
/// nonnegative weight vectors.
#[derive(Clone, Debug)]
pub struct FiniteMeasureSpaceY {
    labels: Vec<String>,
    measures: Vec<(String, Vec<f64>)>,
}

impl FiniteMeasureSpaceY {
    pub fn new(labels: Vec<String>, measures: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if measures.is_empty() {
            return Err(invalid("measure family must be nonempty"));
        }
        for (name, w) in &measures {
            check_dim(&format!("measure {name:?}"), labels.len(), w.len())?;
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(invalid(format!("measure {name:?} has a negative or non-finite weight")));
            }
        }
        Ok(FiniteMeasureSpaceY { labels, measures })
    }

    /// `y₁..y_N` with the given unnamed measures.
    pub fn with_measures(n: usize, measures: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=n).map(|i| format!("y{i}")).collect();
        let named = measures.into_iter().enumerate().map(|(i, w)| (format!("mu{i}"), w)).collect();
        Self::new(labels, named)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn measures(&self) -> &[(String, Vec<f64>)] {
        &self.measures
    }

    pub fn measure(&self, i: usize) -> &[f64] {
        &self.measures[i].1
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        self.measures
            .iter()
            .any(|(_, m)| m.len() == w.len() && m.iter().zip(w).all(|(a, b)| (a - b).abs() <= 1e-12))
    }
}

/// The values `P(y₁), …, P(y_N)` of a mapping into `ℝᵐ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingPoint {
    dim: usize,
    values: Vec<Vec<f64>>,
}

impl MappingPoint {
    pub fn new(dim: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        for v in &values {
            check_dim("mapping value", dim, v.len())?;
        }
        Ok(MappingPoint { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// `θ ∘ P`.
    pub fn compose(&self, theta: &Diffeo) -> Result<Self> {
        check_dim("mapping diffeo", self.dim, theta.dim())?;
        let values = self.values.iter().map(|x| theta.apply(x)).collect::<Result<_>>()?;
        Ok(MappingPoint { dim: self.dim, values })
    }

    /// `Υ ∘ P'`.
    pub fn embed(&self, emb: &AffineEmbedding) -> Result<Self> {
        check_dim("mapping embedding", emb.source_dim(), self.dim)?;
        Ok(MappingPoint {
            dim: emb.target_dim(),
            values: self.values.iter().map(|x| emb.apply(x)).collect(),
        })
    }

    /// `P' ∘ π` for `π: Y → Y'` given as target indices.
    pub fn precompose(&self, pi: &[usize]) -> Result<Self> {
        let values = pi
            .iter()
            .map(|&j| self.values.get(j).cloned().ok_or_else(|| invalid("map index out of range")))
            .collect::<Result<_>>()?;
        Ok(MappingPoint { dim: self.dim, values })
    }

    /// Parses `N` lines of `x₁ … x_m`; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| LiftedError::Parse { line: i + 1, msg };
            let x = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| err(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            match dim {
                None => dim = Some(x.len()),
                Some(d) if d != x.len() => {
                    return Err(err(format!("expected {d} coordinates, got {}", x.len())))
                }
                _ => {}
            }
            values.push(x);
        }
        let dim = dim.ok_or_else(|| invalid("mapping file has no values"))?;
        Ok(MappingPoint { dim, values })
    }
}

/// `F[φ: μ₁..μₙ]` with `φ` on `(ℝᵐ)ⁿ`, blocks laid out consecutively.
#[derive(Clone, Debug)]
pub struct CylinderFunctionMap {
    dim: usize,
    phi: SmoothScalarField,
    measures: Vec<Vec<f64>>,
}

impl CylinderFunctionMap {
    pub fn new(dim: usize, phi: SmoothScalarField, measures: Vec<Vec<f64>>) -> Result<Self> {
        check_dim("mapping cylinder function", dim * measures.len(), phi.dim())?;
        if let Some(first) = measures.first() {
            if measures.iter().any(|m| m.len() != first.len()) {
                return Err(invalid("all measures must live on the same space"));
            }
        }
        Ok(CylinderFunctionMap { dim, phi, measures })
    }

    /// The constant `c` (`n = 0`).
    pub fn constant(dim: usize, c: f64) -> Self {
        CylinderFunctionMap { dim, phi: SmoothScalarField::constant(0, c), measures: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.measures.len()
    }

    pub fn phi(&self) -> &SmoothScalarField {
        &self.phi
    }

    pub fn measures(&self) -> &[Vec<f64>] {
        &self.measures
    }

    /// `Σ_{i₁..iₙ} μ₁(i₁)…μₙ(iₙ) φ(P(y_{i₁}), …, P(y_{iₙ}))`.
    pub fn eval(&self, p: &MappingPoint) -> Result<f64> {
        check_dim("mapping point", self.dim, p.dim)?;
        let n = self.arity();
        if n == 0 {
            return Ok(self.phi.eval(&[]));
        }
        let size = p.values.len();
        check_dim("mapping size", self.measures[0].len(), size)?;
        let mut idx = vec![0usize; n];
        let mut arg = vec![0.0; n * self.dim];
        let mut total = 0.0;
        'outer: loop {
            let w: f64 = idx.iter().zip(&self.measures).map(|(&i, m)| m[i]).product();
            if w != 0.0 {
                for (b, &i) in idx.iter().enumerate() {
                    arg[b * self.dim..(b + 1) * self.dim].copy_from_slice(&p.values[i]);
                }
                total += w * self.phi.eval(&arg);
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < size {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
        Ok(total)
    }

    fn block_join(&self, other: &Self, op: impl Fn(Expr, Expr) -> Expr) -> Result<Self> {
        check_dim("mapping cylinder dimension", self.dim, other.dim)?;
        let shift = self.dim * self.arity();
        let e = op(self.phi.expr().clone(), other.phi.expr().shift_vars(shift));
        let mut measures = self.measures.clone();
        measures.extend(other.measures.iter().cloned());
        Self::new(self.dim, SmoothScalarField::from_expr(shift + other.dim * other.arity(), e), measures)
    }

    /// `F[φ +̄ φ': μ, μ']`; equals `F + F'` only when every measure has unit mass.
    pub fn block_sum(&self, other: &Self) -> Result<Self> {
        self.block_join(other, |a, b| a + b)
    }

    /// `F[φ ×̄ φ': μ, μ'] = F · F'`.
    pub fn block_product(&self, other: &Self) -> Result<Self> {
        self.block_join(other, |a, b| a * b)
    }

    fn mass(&self) -> f64 {
        self.measures.iter().map(|m| m.iter().sum::<f64>()).product()
    }

    /// `F + F'` as a single cylinder function: each summand is divided by the
    /// other's total product mass before the block sum.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        let (m1, m2) = (self.mass(), other.mass());
        if m2 == 0.0 {
            return Ok(self.clone());
        }
        if m1 == 0.0 {
            return Ok(other.clone());
        }
        self.block_join(other, |a, b| a * (1.0 / m2) + b * (1.0 / m1))
    }

    pub fn scale(&self, c: f64) -> Self {
        CylinderFunctionMap { dim: self.dim, phi: self.phi.scale(c), measures: self.measures.clone() }
    }
}

/// `d_{v^{⊕n}}φ = Σ_b ⟨v(x_b), ∇_{x_b}φ⟩`.
fn direct_sum_derivative(v: &SmoothVectorField, phi: &SmoothScalarField, n: usize) -> SmoothScalarField {
    let m = v.dim();
    let grad = phi.grad_exprs();
    let e = Expr::sum((0..n).flat_map(|b| {
        v.components()
            .iter()
            .enumerate()
            .map(move |(i, c)| c.shift_vars(b * m) * &grad[b * m + i])
            .collect::<Vec<_>>()
    }));
    SmoothScalarField::with_support(phi.dim(), e, phi.support().cloned())
}

/// `d̃_vF[φ: μ] = F[d_{v^{⊕n}}φ: μ]`.
pub fn lifted_derivative(v: &SmoothVectorField, f: &CylinderFunctionMap) -> Result<CylinderFunctionMap> {
    require_liftable(v)?;
    check_dim("mapping lifted derivative", f.dim, v.dim())?;
    Ok(CylinderFunctionMap {
        dim: f.dim,
        phi: direct_sum_derivative(v, &f.phi, f.arity()),
        measures: f.measures.clone(),
    })
}

/// `|(d̃_vd̃_w − d̃_wd̃_v)F(P) − d̃_{[v,w]}F(P)|` and the largest term.
pub fn lie_compat_residual(
    v: &SmoothVectorField,
    w: &SmoothVectorField,
    f: &CylinderFunctionMap,
    p: &MappingPoint,
) -> Result<(f64, f64)> {
    let vw = lifted_derivative(v, &lifted_derivative(w, f)?)?.eval(p)?;
    let wv = lifted_derivative(w, &lifted_derivative(v, f)?)?.eval(p)?;
    let br = lifted_derivative(&lie_bracket(v, w)?, f)?.eval(p)?;
    Ok(((vw - wv - br).abs(), vw.abs().max(wv.abs()).max(br.abs())))
}

/// Central difference of `t ↦ F(e^{tv} ∘ P)` at `t = 0`.
pub fn flow_fd_derivative(
    f: &CylinderFunctionMap,
    v: &SmoothVectorField,
    p: &MappingPoint,
    h: f64,
) -> Result<f64> {
    let plus = p.compose(&Diffeo::Flow { field: v.clone(), t: h })?;
    let minus = p.compose(&Diffeo::Flow { field: v.clone(), t: -h })?;
    Ok((f.eval(&plus)? - f.eval(&minus)?) / (2.0 * h))
}

/// `π_*μ` on `Y'` for `π` given as target indices.
pub fn push_measure(pi: &[usize], mu: &[f64], target_size: usize) -> Result<Vec<f64>> {
    check_dim("measure pushforward", pi.len(), mu.len())?;
    let mut out = vec![0.0; target_size];
    for (&j, w) in pi.iter().zip(mu) {
        *out.get_mut(j).ok_or_else(|| invalid("map index out of range"))? += w;
    }
    Ok(out)
}

/// `F[φ: μ] ∘ π̂ = F[φ: π_*μ]` for `π̂: P' ↦ P'∘π`; `π_*μ` must lie in `𝒴'`.
pub fn precompose(
    pi: &[usize],
    target: &FiniteMeasureSpaceY,
    f: &CylinderFunctionMap,
) -> Result<CylinderFunctionMap> {
    let measures = f
        .measures
        .iter()
        .map(|mu| {
            let pushed = push_measure(pi, mu, target.size())?;
            if target.contains(&pushed) {
                Ok(pushed)
            } else {
                Err(LiftedError::DomainViolation(
                    "pushed-forward measure is not in the target family".into(),
                ))
            }
        })
        .collect::<Result<_>>()?;
    CylinderFunctionMap::new(f.dim, f.phi.clone(), measures)
}

/// `F[φ: μ] ∘ Υ̂ = F[φ ∘ Υ^{⊕n}: μ]`.
pub fn embedding_pullback(emb: &AffineEmbedding, f: &CylinderFunctionMap) -> Result<CylinderFunctionMap> {
    check_dim("mapping embedding", emb.target_dim(), f.dim)?;
    let k = emb.source_dim();
    let base = emb.apply_exprs();
    let subs: Vec<Expr> = (0..f.arity())
        .flat_map(|b| base.iter().map(move |e| e.shift_vars(b * k)).collect::<Vec<_>>())
        .collect();
    let phi = SmoothScalarField::from_expr(k * f.arity(), f.phi.expr().substitute(&subs));
    CylinderFunctionMap::new(k, phi, f.measures.clone())
}

/// Residual of `d̃_{v'}(F∘Υ̂)(P') = (d̃_vF)(Υ∘P')` with `v` extending `v'`.
pub fn embedding_diff_residual(
    emb: &AffineEmbedding,
    v_src: &SmoothVectorField,
    f: &CylinderFunctionMap,
    p_src: &MappingPoint,
) -> Result<(f64, f64)> {
    let lhs = lifted_derivative(v_src, &embedding_pullback(emb, f)?)?.eval(p_src)?;
    let v = emb.extend_field(v_src)?;
    let rhs = lifted_derivative(&v, f)?.eval(&p_src.embed(emb)?)?;
    Ok(((lhs - rhs).abs(), lhs.abs().max(rhs.abs())))
}

/// Functionals on mappings `Y → ℝᵐ` with lifted vector fields.
#[derive(Clone, Debug)]
pub struct MappingGeometry {
    dim: usize,
    space: FiniteMeasureSpaceY,
    sample_radius: f64,
}

impl MappingGeometry {
    pub fn new(dim: usize, space: FiniteMeasureSpaceY, sample_radius: f64) -> Self {
        MappingGeometry { dim, space, sample_radius }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> &FiniteMeasureSpaceY {
        &self.space
    }
}

impl Geometry for MappingGeometry {
    type Point = MappingPoint;
    type Element = CylinderFunctionMap;
    type Generator = SmoothVectorField;

    fn sample_point(&self, rng: &mut dyn RngCore) -> MappingPoint {
        let r = self.sample_radius;
        let values = (0..self.space.size())
            .map(|_| (0..self.dim).map(|_| rng.random_range(-r..=r)).collect())
            .collect();
        MappingPoint { dim: self.dim, values }
    }

    fn eval(&self, a: &CylinderFunctionMap, p: &MappingPoint) -> Result<f64> {
        a.eval(p)
    }

    fn constant(&self, c: f64) -> CylinderFunctionMap {
        CylinderFunctionMap::constant(self.dim, c)
    }

    fn add(&self, a: &CylinderFunctionMap, b: &CylinderFunctionMap) -> Result<CylinderFunctionMap> {
        a.sum(b)
    }

    fn mul(&self, a: &CylinderFunctionMap, b: &CylinderFunctionMap) -> Result<CylinderFunctionMap> {
        a.block_product(b)
    }

    fn scale(&self, c: f64, a: &CylinderFunctionMap) -> CylinderFunctionMap {
        a.scale(c)
    }

    fn derive(&self, g: &SmoothVectorField, a: &CylinderFunctionMap) -> Result<CylinderFunctionMap> {
        lifted_derivative(g, a)
    }

    fn bracket(&self, g: &SmoothVectorField, h: &SmoothVectorField) -> Result<SmoothVectorField> {
        lie_bracket(g, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::make_bump;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn p2() -> MappingPoint {
        MappingPoint::new(2, vec![vec![0.1, 0.2], vec![-0.3, 0.5], vec![0.4, -0.1]]).unwrap()
    }

    fn phi2() -> SmoothScalarField {
        // φ(x, x') on ℝ² × ℝ²
        let b = make_bump(&[0.0, 0.0, 0.0, 0.0], 3.0).unwrap();
        b.mul(&SmoothScalarField::from_expr(4, (x(0) * x(3)).sin() + x(1) * x(2) + x(0).powi(2))).unwrap()
    }

    #[test]
    fn eval_examples() {
        let phi = SmoothScalarField::from_expr(1, x(0).exp());
        let f = CylinderFunctionMap::new(1, phi, vec![vec![1.0]]).unwrap();
        let p = MappingPoint::new(1, vec![vec![0.5]]).unwrap();
        assert_eq!(f.eval(&p).unwrap(), 0.5f64.exp());
        let z = CylinderFunctionMap::new(2, phi2(), vec![vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert_eq!(z.eval(&p2()).unwrap(), 0.0);
        let f = CylinderFunctionMap::new(2, phi2(), vec![vec![2.0, 0.0, 0.0], vec![0.0, 0.5, 0.0]]).unwrap();
        let v = p2().values().to_vec();
        let want = 2.0 * 0.5 * phi2().eval(&[v[0][0], v[0][1], v[1][0], v[1][1]]);
        assert!((f.eval(&p2()).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn block_identities() {
        let a = CylinderFunctionMap::new(2, phi2(), vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.0, 0.4]]).unwrap();
        let b = CylinderFunctionMap::new(
            2,
            SmoothScalarField::from_expr(2, x(0).cos() * x(1)),
            vec![vec![1.5, 0.5, 1.0]],
        )
        .unwrap();
        let p = p2();
        let (fa, fb) = (a.eval(&p).unwrap(), b.eval(&p).unwrap());
        assert!((a.block_product(&b).unwrap().eval(&p).unwrap() - fa * fb).abs() < 1e-12);
        assert!((a.sum(&b).unwrap().eval(&p).unwrap() - (fa + fb)).abs() < 1e-12);
        let prob = CylinderFunctionMap::new(2, b.phi().clone(), vec![vec![0.25, 0.25, 0.5]]).unwrap();
        let fp = prob.eval(&p).unwrap();
        assert!((a.block_sum(&prob).unwrap().eval(&p).unwrap() - (fa + fp)).abs() < 1e-12);
    }

    #[test]
    fn lifted_derivative_matches_flow() {
        let f = CylinderFunctionMap::new(2, phi2(), vec![vec![0.2, 0.3, 0.5], vec![1.0, 0.5, 0.0]]).unwrap();
        let v = SmoothVectorField::masked(&make_bump(&[0.0, 0.0], 2.0).unwrap(), vec![x(1) + 1.0, x(0) * x(1)]).unwrap();
        let p = p2();
        let exact = lifted_derivative(&v, &f).unwrap().eval(&p).unwrap();
        let fd = flow_fd_derivative(&f, &v, &p, 1e-3).unwrap();
        assert!((exact - fd).abs() < 1e-6 * (1.0 + exact.abs()));
        let w = SmoothVectorField::masked(&make_bump(&[0.1, 0.0], 1.8).unwrap(), vec![x(0).sin(), Expr::constant(0.7)]).unwrap();
        let (r, s) = lie_compat_residual(&v, &w, &f, &p).unwrap();
        assert!(r <= 1e-8 * s.max(1.0));
    }

    #[test]
    fn one_block_matches_measure_rule() {
        let phi = make_bump(&[0.0, 0.0], 2.0).unwrap();
        let f = CylinderFunctionMap::new(2, phi.clone(), vec![vec![1.0, 2.0, 0.5]]).unwrap();
        let v = SmoothVectorField::constant(&[1.0, -1.0]);
        let d = lifted_derivative(&v, &f).unwrap().eval(&p2()).unwrap();
        let dv = crate::smooth::directional_derivative_scalar(&v, &phi).unwrap();
        let want: f64 = p2().values().iter().zip([1.0, 2.0, 0.5]).map(|(y, w)| w * dv.eval(y)).sum();
        assert!((d - want).abs() < 1e-14);
        // φ ignoring the second block
        let g = CylinderFunctionMap::new(
            2,
            SmoothScalarField::from_expr(4, x(0) * x(1)),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]],
        )
        .unwrap();
        let d = lifted_derivative(&v, &g).unwrap().eval(&p2()).unwrap();
        let pt = p2();
        let y = &pt.values()[0];
        assert!((d - 2.0 * (y[1] - y[0])).abs() < 1e-14);
    }

    #[test]
    fn precompose_rewrites() {
        let y = FiniteMeasureSpaceY::with_measures(4, vec![vec![0.5, 1.0, 0.0, 2.0]]).unwrap();
        let pi = [1, 0, 1, 2];
        let pushed = push_measure(&pi, y.measure(0), 3).unwrap();
        assert_eq!(pushed, vec![1.0, 0.5, 2.0]);
        let target = FiniteMeasureSpaceY::with_measures(3, vec![pushed.clone()]).unwrap();
        let f = CylinderFunctionMap::new(2, phi2(), vec![y.measure(0).to_vec(), y.measure(0).to_vec()]).unwrap();
        let rewritten = precompose(&pi, &target, &f).unwrap();
        let p_target = p2();
        let direct = f.eval(&p_target.precompose(&pi).unwrap()).unwrap();
        assert!((rewritten.eval(&p_target).unwrap() - direct).abs() < 1e-12);
        let collapse = push_measure(&[0, 0, 0, 0], y.measure(0), 1).unwrap();
        assert_eq!(collapse, vec![3.5]);
        let other = FiniteMeasureSpaceY::with_measures(3, vec![vec![1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(precompose(&pi, &other, &f), Err(LiftedError::DomainViolation(_))));
    }

    #[test]
    fn embedding_is_differentiable() {
        let emb = AffineEmbedding::coordinate_inclusion(1, 2).unwrap();
        let f = CylinderFunctionMap::new(2, phi2(), vec![vec![0.5, 1.0], vec![1.0, 0.25]]).unwrap();
        let v = SmoothVectorField::masked(&make_bump(&[0.0], 1.5).unwrap(), vec![x(0) + 1.0]).unwrap();
        let p = MappingPoint::new(1, vec![vec![0.3], vec![-0.6]]).unwrap();
        let (r, s) = embedding_diff_residual(&emb, &v, &f, &p).unwrap();
        assert!(r <= 1e-9 * s.max(1.0));
        let direct = f.eval(&p.embed(&emb).unwrap()).unwrap();
        assert!((embedding_pullback(&emb, &f).unwrap().eval(&p).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn parse_mapping() {
        let p = MappingPoint::parse("# P\n0 1\n2 3\n").unwrap();
        assert_eq!(p.values().len(), 2);
        assert!(MappingPoint::parse("0 1\n2\n").is_err());
    }
}
