//! Curves in `ℝᵏ`, action functionals `F(C) = ψ(∫L₁(C,Ċ), …, ∫Lₙ(C,Ċ))`
//! and the prolongation `v†(x, y) = (v(x), Jv(x)·y)` that differentiates them.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::cylinder::{require_liftable, Cylinder, Generator};
use crate::error::{check_dim, invalid, LiftedError, Result};
use crate::expr::{Expr, Tape};
use crate::geometry::Geometry;
use crate::quadrature::composite;
use crate::smooth::{directional_derivative_scalar, flow, lie_bracket, Precision, SmoothScalarField, SmoothVectorField};

/// Gauss–Legendre nodes per panel of [`action_eval`]; one panel per unit length.
pub const NODES_PER_PANEL: usize = 32;

/// Natural cubic spline through uniformly spaced samples.
#[derive(Clone, Debug)]
struct Spline {
    a: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(a: f64, b: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let h = (b - a) / (n - 1) as f64;
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for interior second derivatives
            let k = n - 2;
            let mut diag = vec![4.0; k];
            let mut rhs: Vec<f64> = (1..n - 1).map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h)).collect();
            for i in 1..k {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
            }
        }
        Spline { a, h, y, m }
    }

    fn eval(&self, s: f64) -> (f64, f64) {
        let n = self.y.len();
        let j = (((s - self.a) / self.h).floor().max(0.0) as usize).min(n - 2);
        let h = self.h;
        let (l, r) = (s - (self.a + j as f64 * h), self.a + (j + 1) as f64 * h - s);
        let (mj, mk) = (self.m[j], self.m[j + 1]);
        let cj = self.y[j] / h - mj * h / 6.0;
        let ck = self.y[j + 1] / h - mk * h / 6.0;
        let pos = mj * r.powi(3) / (6.0 * h) + mk * l.powi(3) / (6.0 * h) + cj * r + ck * l;
        let vel = -mj * r * r / (2.0 * h) + mk * l * l / (2.0 * h) - cj + ck;
        (pos, vel)
    }
}

#[derive(Clone)]
enum Shape {
    /// Tape outputs: k positions then k velocities, in the variable `s`.
    Analytic { pos: Vec<Expr>, tape: Arc<Tape> },
    Spline(Vec<Spline>),
    /// `(C, Ċ)` carried by the time-`t` flow of a prolonged field.
    Transported { base: Box<Curve>, prolonged: SmoothVectorField, t: f64 },
}

/// A curve `C: [a, b] → ℝᵏ` with its velocity.
#[derive(Clone)]
pub struct Curve {
    k: usize,
    a: f64,
    b: f64,
    shape: Shape,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.shape {
            Shape::Analytic { .. } => "analytic",
            Shape::Spline(_) => "spline",
            Shape::Transported { .. } => "transported",
        };
        f.debug_struct("Curve").field("k", &self.k).field("domain", &(self.a, self.b)).field("kind", &kind).finish()
    }
}

fn check_domain(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(invalid(format!("curve domain [{a}, {b}] must satisfy a < b")))
    }
}

impl Curve {
    /// Position components as expressions in variable 0; velocity is exact.
    pub fn analytic(a: f64, b: f64, pos: Vec<Expr>) -> Result<Self> {
        check_domain(a, b)?;
        if pos.is_empty() {
            return Err(invalid("curve needs at least one component"));
        }
        if pos.iter().any(|p| p.max_var().is_some_and(|v| v > 0)) {
            return Err(invalid("curve components may only use variable 0"));
        }
        let mut outs = pos.clone();
        outs.extend(pos.iter().map(|p| p.diff(0)));
        Ok(Curve { k: pos.len(), a, b, shape: Shape::Analytic { pos, tape: Arc::new(Tape::compile(&outs)) } })
    }

    /// Natural cubic spline through `samples[i] = C(a + i(b−a)/(N−1))`.
    pub fn from_samples(a: f64, b: f64, samples: &[Vec<f64>]) -> Result<Self> {
        check_domain(a, b)?;
        if samples.len() < 2 {
            return Err(invalid("a sampled curve needs at least 2 samples"));
        }
        let k = samples[0].len();
        if k == 0 {
            return Err(invalid("curve needs at least one component"));
        }
        for s in samples {
            check_dim("curve sample", k, s.len())?;
        }
        let splines = (0..k).map(|i| Spline::new(a, b, samples.iter().map(|s| s[i]).collect())).collect();
        Ok(Curve { k, a, b, shape: Shape::Spline(splines) })
    }

    /// `s ↦ e^{tv}(C(s))`, with velocity transported by `v†`.
    pub fn transported(&self, v: &SmoothVectorField, t: f64) -> Result<Curve> {
        check_dim("curve flow field", self.k, v.dim())?;
        require_liftable(v)?;
        Ok(Curve {
            k: self.k,
            a: self.a,
            b: self.b,
            shape: Shape::Transported { base: Box::new(self.clone()), prolonged: prolong(v), t },
        })
    }

    /// `u ↦ C(αu + β)` on `[(a−β)/α, (b−β)/α]`, `α > 0`.
    pub fn reparametrized(&self, alpha: f64, beta: f64) -> Result<Curve> {
        if !(alpha > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(invalid("reparametrization needs a finite α > 0"));
        }
        let (a, b) = ((self.a - beta) / alpha, (self.b - beta) / alpha);
        match &self.shape {
            Shape::Analytic { pos, .. } => {
                let u = [Expr::var(0) * alpha + beta];
                Curve::analytic(a, b, pos.iter().map(|p| p.substitute(&u)).collect())
            }
            _ => {
                let n = 257;
                let samples: Vec<Vec<f64>> = (0..n)
                    .map(|i| self.position(self.a + (self.b - self.a) * i as f64 / (n - 1) as f64))
                    .collect::<Result<_>>()?;
                Curve::from_samples(a, b, &samples)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Spline-derived velocities are tagged lower precision.
    pub fn precision(&self) -> Precision {
        match &self.shape {
            Shape::Analytic { pos, .. } if pos.iter().all(|p| !p.has_opaque()) => Precision::Exact,
            Shape::Analytic { .. } | Shape::Spline(_) => Precision::FdFallback,
            Shape::Transported { base, .. } => base.precision(),
        }
    }

    /// `(C(s), Ċ(s))` concatenated.
    pub fn state(&self, s: f64) -> Result<Vec<f64>> {
        match &self.shape {
            Shape::Analytic { tape, .. } => Ok(tape.eval(&[s])),
            Shape::Spline(sp) => {
                let (p, v): (Vec<f64>, Vec<f64>) = sp.iter().map(|c| c.eval(s)).unzip();
                Ok(p.into_iter().chain(v).collect())
            }
            Shape::Transported { base, prolonged, t } => flow(prolonged, *t, &base.state(s)?),
        }
    }

    pub fn position(&self, s: f64) -> Result<Vec<f64>> {
        let mut st = self.state(s)?;
        st.truncate(self.k);
        Ok(st)
    }

    pub fn velocity(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.state(s)?.split_off(self.k))
    }

    /// Header `k a b N`, then `N` uniformly spaced position samples.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, msg: String| LiftedError::Parse { line, msg };
        let (n0, header) = lines.next().ok_or_else(|| err(0, "missing header".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(err(n0, "header must be `k a b N`".into()));
        }
        let k: usize = h[0].parse().map_err(|e| err(n0, format!("k: {e}")))?;
        let a: f64 = h[1].parse().map_err(|e| err(n0, format!("a: {e}")))?;
        let b: f64 = h[2].parse().map_err(|e| err(n0, format!("b: {e}")))?;
        let n: usize = h[3].parse().map_err(|e| err(n0, format!("N: {e}")))?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "missing sample line".into()))?;
            let row = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| err(ln, format!("{t:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != k {
                return Err(err(ln, format!("expected {k} coordinates")));
            }
            samples.push(row);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing data after samples".into()));
        }
        Curve::from_samples(a, b, &samples)
    }

    pub fn to_text(&self, n: usize) -> Result<String> {
        let n = n.max(2);
        let mut s = format!("{} {:?} {:?} {}\n", self.k, self.a, self.b, n);
        for i in 0..n {
            let p = self.position(self.a + (self.b - self.a) * i as f64 / (n - 1) as f64)?;
            let row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        Ok(s)
    }
}

/// `L(x, y)` on `ℝᵏ × ℝᵏ`: variables `0..k` are positions, `k..2k` velocities.
#[derive(Clone, Debug)]
pub struct LagrangianDensity {
    k: usize,
    field: SmoothScalarField,
}

impl LagrangianDensity {
    pub fn new(k: usize, expr: Expr) -> Result<Self> {
        if expr.max_var().is_some_and(|v| v >= 2 * k) {
            return Err(invalid(format!("density uses a variable beyond 2k = {}", 2 * k)));
        }
        Ok(LagrangianDensity { k, field: SmoothScalarField::from_expr(2 * k, expr) })
    }

    pub fn from_field(k: usize, field: SmoothScalarField) -> Result<Self> {
        check_dim("density", 2 * k, field.dim())?;
        Ok(LagrangianDensity { k, field })
    }

    /// `|y|²`.
    pub fn kinetic(k: usize) -> Self {
        let e = Expr::sum((k..2 * k).map(|i| Expr::var(i).powi(2)));
        LagrangianDensity { k, field: SmoothScalarField::from_expr(2 * k, e) }
    }

    /// `√(|y|² + δ²)`, a smooth stand-in for the speed.
    pub fn smoothed_speed(k: usize, delta: f64) -> Self {
        let e = (Expr::sum((k..2 * k).map(|i| Expr::var(i).powi(2))) + delta * delta).sqrt();
        LagrangianDensity { k, field: SmoothScalarField::from_expr(2 * k, e) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &SmoothScalarField {
        &self.field
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.field.eval(&[x, y].concat())
    }

    /// `(∂L/∂x, ∂L/∂y)`.
    pub fn gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut g = self.field.grad(&[x, y].concat());
        let gy = g.split_off(self.k);
        (g, gy)
    }
}

impl Generator for LagrangianDensity {
    type Point = Curve;

    fn pair(&self, c: &Curve) -> Result<f64> {
        check_dim("density on curve", self.k, c.dim())?;
        let (a, b) = c.domain();
        let panels = ((b - a).ceil() as usize).max(2);
        let mut total = 0.0;
        for (s, w) in composite(a, b, panels, NODES_PER_PANEL) {
            total += w * self.field.eval(&c.state(s)?);
        }
        Ok(total)
    }
}

/// `F(C) = ψ(∫L₁(C,Ċ)ds, …, ∫Lₙ(C,Ċ)ds)`.
pub type ActionFunctional = Cylinder<LagrangianDensity>;

pub fn action_eval(f: &ActionFunctional, c: &Curve) -> Result<f64> {
    f.eval(c)
}

/// `v†(x, y) = (v(x), Jv(x)·y)` on `ℝ^{2k}`; complete whenever `v` is.
pub fn prolong(v: &SmoothVectorField) -> SmoothVectorField {
    let k = v.dim();
    let y: Vec<Expr> = (k..2 * k).map(Expr::var).collect();
    let mut comps = v.components().to_vec();
    comps.extend(v.jacobian_exprs().iter().map(|row| Expr::dot(row, &y)));
    let out = SmoothVectorField::from_exprs(comps, None);
    if v.is_complete() {
        out.assume_complete()
    } else {
        out
    }
}

/// `d_{v†}L = ⟨v(x), ∂L/∂x⟩ + ⟨Jv(x)y, ∂L/∂y⟩`.
pub fn prolonged_derivative(v: &SmoothVectorField, l: &LagrangianDensity) -> Result<LagrangianDensity> {
    check_dim("prolonged derivative", l.k, v.dim())?;
    LagrangianDensity::from_field(l.k, directional_derivative_scalar(&prolong(v), &l.field)?)
}

/// `d̃_vF = F[ξ: L₁..Lₙ, d_{v†}L₁..d_{v†}Lₙ]`.
pub fn lifted_derivative(v: &SmoothVectorField, f: &ActionFunctional) -> Result<ActionFunctional> {
    require_liftable(v)?;
    f.lift_with(|l| prolonged_derivative(v, l))
}

/// Central difference of `t ↦ F(e^{tv}∘C)` at `t = 0`.
pub fn flow_fd_derivative(f: &ActionFunctional, v: &SmoothVectorField, c: &Curve, h: f64) -> Result<f64> {
    Ok((f.eval(&c.transported(v, h)?)? - f.eval(&c.transported(v, -h)?)?) / (2.0 * h))
}

/// `|(d̃_vd̃_w − d̃_wd̃_v)F(C) − d̃_{[v,w]}F(C)|` and the largest term.
pub fn lie_compat_residual(
    v: &SmoothVectorField,
    w: &SmoothVectorField,
    f: &ActionFunctional,
    c: &Curve,
) -> Result<(f64, f64)> {
    let vw = lifted_derivative(v, &lifted_derivative(w, f)?)?.eval(c)?;
    let wv = lifted_derivative(w, &lifted_derivative(v, f)?)?.eval(c)?;
    let br = lifted_derivative(&lie_bracket(v, w)?, f)?.eval(c)?;
    Ok(((vw - wv - br).abs(), vw.abs().max(wv.abs()).max(br.abs())))
}

/// `max |[v,w]†(x,y) − [v†,w†](x,y)|` over the given points of `ℝ^{2k}`.
pub fn prolongation_bracket_residual(
    v: &SmoothVectorField,
    w: &SmoothVectorField,
    points: &[Vec<f64>],
) -> Result<f64> {
    let lhs = prolong(&lie_bracket(v, w)?);
    let rhs = lie_bracket(&prolong(v), &prolong(w))?;
    let mut worst: f64 = 0.0;
    for p in points {
        check_dim("prolongation probe", 2 * v.dim(), p.len())?;
        for (a, b) in lhs.eval(p).iter().zip(rhs.eval(p)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Action functionals on random analytic curves in `ℝᵏ`.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    k: usize,
}

impl CurveGeometry {
    pub fn new(k: usize) -> Self {
        CurveGeometry { k: k.max(1) }
    }

    pub fn dim(&self) -> usize {
        self.k
    }
}

/// `C_i(s) = c₀ + c₁s + c₂ sin(ωs + φ)` on a random interval of length in `[0.5, 2]`.
pub fn random_curve(k: usize, rng: &mut dyn RngCore) -> Curve {
    let a = rng.random_range(-1.0..0.0);
    let b = a + rng.random_range(0.5..2.0);
    let pos = (0..k)
        .map(|_| {
            let s = Expr::var(0);
            let (c0, c1, c2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5));
            let (om, ph) = (rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU));
            (s.clone() * om + ph).sin() * c2 + s * c1 + c0
        })
        .collect();
    Curve::analytic(a, b, pos).expect("random curve is well formed")
}

impl Geometry for CurveGeometry {
    type Point = Curve;
    type Element = ActionFunctional;
    type Generator = SmoothVectorField;

    fn sample_point(&self, rng: &mut dyn RngCore) -> Curve {
        random_curve(self.k, rng)
    }

    fn eval(&self, a: &ActionFunctional, p: &Curve) -> Result<f64> {
        a.eval(p)
    }

    fn constant(&self, c: f64) -> ActionFunctional {
        Cylinder::constant(c)
    }

    fn add(&self, a: &ActionFunctional, b: &ActionFunctional) -> Result<ActionFunctional> {
        Ok(a.add(b))
    }

    fn mul(&self, a: &ActionFunctional, b: &ActionFunctional) -> Result<ActionFunctional> {
        Ok(a.mul(b))
    }

    fn scale(&self, c: f64, a: &ActionFunctional) -> ActionFunctional {
        a.scale(c)
    }

    fn derive(&self, g: &SmoothVectorField, a: &ActionFunctional) -> Result<ActionFunctional> {
        lifted_derivative(g, a)
    }

    fn bracket(&self, g: &SmoothVectorField, h: &SmoothVectorField) -> Result<SmoothVectorField> {
        lie_bracket(g, h)
    }
}
