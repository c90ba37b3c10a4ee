//! End-to-end scenarios printing residual tables. Each demo also yields a
//! report in the verification schema, one case per table row.

use std::f64::consts::PI;
use std::fmt::Write as _;

use lifted_core::curve::{self, action_eval, Curve, LagrangianDensity};
use lifted_core::cylinder::Cylinder;
use lifted_core::mapping;
use lifted_core::measure::{self, markov_check, tangent_inner_product};
use lifted_core::smooth::{RiemannianMetric, SmoothScalarField, SmoothVectorField};
use lifted_core::submanifold::meshes::{disk, triangle, unit_square};
use lifted_core::submanifold::{stokes_check, stokes_refinement_study};
use rand::Rng;

use crate::error::{HarnessError, Result};
use crate::gen::{self, smooth_expr, x};
use crate::harness::{rel_one, rel_scale};
use crate::report::{CaseReport, Report, Status, ERROR_RESIDUAL};
use crate::seed::{case_rng, case_seed};
use crate::suites::measure::FD_STEP;
use crate::suites::submanifold::{refinement_form, refinement_levels, RATIO_CENTER, RATIO_HALF_WIDTH};

pub const DEMO_NAMES: [&str; 5] =
    ["measure-gradient", "dirichlet-markov", "stokes-boundary", "action-derivative", "mapping-derivative"];

/// Largest accepted `--refine`.
pub const MAX_REFINE: usize = 6;

#[derive(Clone, Debug)]
pub struct DemoOptions {
    pub seed: u64,
    /// Rows of the Stokes refinement table.
    pub refine: usize,
}

/// A printed table plus the cases it certifies.
pub struct DemoOutput {
    pub text: String,
    pub csv: String,
    pub report: Report,
}

struct Table {
    title: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: &str, header: Vec<&'static str>) -> Self {
        Table { title: title.into(), header, rows: Vec::new() }
    }

    fn render(&self, out: &mut String) {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| self.rows.iter().map(|r| r[i].chars().count()).chain([self.header[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: Vec<&str>| -> String {
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let _ = writeln!(out, "\n{}", self.title);
        let _ = writeln!(out, "{}", line(self.header.clone()));
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
        }
    }

    fn csv(&self, out: &mut String) {
        let _ = writeln!(out, "# {}", self.title);
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
    }
}

struct Demo {
    name: &'static str,
    seed: u64,
    tables: Vec<Table>,
    cases: Vec<CaseReport>,
}

impl Demo {
    fn rng(&self, id: &str) -> rand_chacha::ChaCha8Rng {
        case_rng(self.seed, &format!("{}/{id}", self.name))
    }

    fn case(&mut self, id: &str, desc: &str, anchor: &str, residual: lifted_core::Result<f64>, tolerance: f64) -> f64 {
        let (status, residual, desc) = match residual {
            Ok(r) if r.is_finite() && r <= tolerance => (Status::Pass, r, desc.to_string()),
            Ok(r) => (Status::Fail, if r.is_finite() { r } else { ERROR_RESIDUAL }, desc.to_string()),
            Err(e) => (Status::Fail, ERROR_RESIDUAL, format!("{desc} (error: {e})")),
        };
        let id = format!("{}/{id}", self.name);
        self.cases.push(CaseReport {
            seed: case_seed(self.seed, &id),
            id,
            desc,
            anchor: anchor.into(),
            status,
            residual,
            tolerance,
            ms: 0,
        });
        residual
    }

    fn finish(self, banner: &str) -> DemoOutput {
        let mut text = format!("== {} ==\n{banner}\n", self.name);
        let mut csv = String::new();
        for t in &self.tables {
            t.render(&mut text);
            t.csv(&mut csv);
        }
        let report = Report::new(self.name, self.seed, self.cases);
        let _ = write!(
            text,
            "\n{} passed, {} failed\n",
            report.summary.pass, report.summary.fail
        );
        DemoOutput { text, csv, report }
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn run_demo(name: &str, opts: &DemoOptions) -> Result<DemoOutput> {
    if opts.refine == 0 || opts.refine > MAX_REFINE {
        return Err(HarnessError::usage(format!("--refine must be in 1..={MAX_REFINE}, got {}", opts.refine)));
    }
    let name = DEMO_NAMES.iter().find(|d| **d == name).copied().ok_or_else(|| {
        HarnessError::usage(format!("unknown demo {name:?}; expected one of {}", DEMO_NAMES.join(", ")))
    })?;
    let mut demo = Demo { name, seed: opts.seed, tables: Vec::new(), cases: Vec::new() };
    let banner = match name {
        "measure-gradient" => measure_gradient(&mut demo),
        "dirichlet-markov" => dirichlet_markov(&mut demo),
        "stokes-boundary" => stokes_boundary(&mut demo, opts.refine),
        "action-derivative" => action_derivative(&mut demo),
        _ => mapping_derivative(&mut demo),
    };
    Ok(demo.finish(banner))
}

const GRADIENT: &str = "canonical vector field w^μ";

/// Both sides of an identity, or the error that stopped evaluation.
type Sides = lifted_core::Result<(f64, f64)>;

fn sides_row(sides: &Sides) -> (f64, f64) {
    sides.as_ref().map(|p| *p).unwrap_or((f64::NAN, f64::NAN))
}

fn rel_residual(sides: &Sides) -> lifted_core::Result<f64> {
    sides.clone().map(|(a, b)| rel_scale((a - b).abs(), a.abs().max(b.abs())))
}

fn measure_gradient(demo: &mut Demo) -> &'static str {
    let mut rng = demo.rng("instance");
    let m = 2;
    let phi = gen::bump_function(m, &mut rng);
    let ident = Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![phi]).expect("arity 1");
    let random = gen::measure_function(m, 2, &mut rng);
    let mu = gen::particle_measure(m, &mut rng);
    let g = RiemannianMetric::conformal(&SmoothScalarField::from_expr(m, (smooth_expr(m, &mut rng) * 0.3).sin()));
    let mut table = Table::new(
        "⟨[v], ∇F(μ)⟩_g against d̃_vF(μ), for ψ = id and for a random ψ",
        vec!["psi", "v", "<[v],grad F>", "d_v F", "residual"],
    );
    for (label, f) in [("id", &ident), ("random", &random)] {
        let w = measure::gradient(f, &mu, &g).map(|(w, _)| w);
        for i in 0..10 {
            let id = format!("{label}/{i:02}");
            let v = gen::liftable_field(m, &mut demo.rng(&id));
            let sides: Sides = w.clone().and_then(|w| {
                Ok((tangent_inner_product(&v, &w, &mu, &g)?, measure::lifted_derivative(&v, f)?.eval(&mu)?))
            });
            let (a, b) = sides_row(&sides);
            let r = demo.case(&id, "gradient duality ⟨[v], ∇F(μ)⟩_g = d̃_vF(μ)", GRADIENT, rel_residual(&sides), 1e-9);
            table.rows.push(vec![label.into(), i.to_string(), sci(a), sci(b), sci(r)]);
        }
    }
    demo.tables.push(table);
    "Gradient of a cylinder function on particle measures, paired with lifted vector fields."
}

const MARKOV: &str = "is a Markovian form";

fn dirichlet_markov(demo: &mut Demo) -> &'static str {
    let mut table = Table::new(
        "𝔏(ε∘F, ε∘F) against 𝔏(F, F) over a random measure ensemble",
        vec!["instance", "L(F,F)", "L(tanh F)", "excess", "L(id F) - L(F,F)"],
    );
    for i in 0..10 {
        let id = format!("{i:02}");
        let mut rng = demo.rng(&id);
        let m = rng.random_range(1..=2);
        let n = rng.random_range(1..=2);
        let gens = (0..n).map(|_| gen::bump_function(m, &mut rng)).collect();
        let f = Cylinder::new(gen::compact_psi(n, &mut rng), gens).expect("arity matches");
        let theta = gen::random_measure(m, 3, &mut rng);
        let g = RiemannianMetric::euclidean(m);
        let tanh = markov_check(&f, &SmoothScalarField::from_expr(1, x(0).tanh()), &theta, &g);
        let ident = markov_check(&f, &SmoothScalarField::from_expr(1, x(0)), &theta, &g);
        let excess = tanh.as_ref().map(|r| (r.lhs - r.rhs).max(0.0)).map_err(Clone::clone);
        let eq = ident.as_ref().map(|r| rel_scale((r.lhs - r.rhs).abs(), r.rhs.abs())).map_err(Clone::clone);
        let ex = demo.case(&format!("{id}/tanh"), "𝔏(tanh∘F) ≤ 𝔏(F); residual is the excess", MARKOV, excess, 1e-12);
        let eqr = demo.case(&format!("{id}/identity"), "identity contraction leaves 𝔏 unchanged", MARKOV, eq, 1e-12);
        let (base, lt) = tanh.map(|r| (r.rhs, r.lhs)).unwrap_or((f64::NAN, f64::NAN));
        table.rows.push(vec![id, sci(base), sci(lt), sci(ex), sci(eqr)]);
    }
    demo.tables.push(table);
    "Dirichlet form of a random measure and the unit contraction tanh."
}

const STOKES: &str = "By Stokes' Theorem we have";

fn stokes_boundary(demo: &mut Demo, refine: usize) -> &'static str {
    let mut exact = Table::new(
        "polynomial forms, exact quadrature: F(∂E) against F[ψ: dω](E)",
        vec!["mesh", "F(dE)", "F[psi: d omega](E)", "residual"],
    );
    for (label, mesh) in [("square", unit_square(4)), ("triangle", triangle(4)), ("disk", disk(4, 1.0))] {
        let mut rng = demo.rng(&format!("exact/{label}"));
        let sides: Sides = mesh.and_then(|e| {
            let forms = (0..2).map(|_| gen::poly_one_form(4, &mut rng)).collect();
            let f = Cylinder::new(SmoothScalarField::from_expr(2, smooth_expr(2, &mut rng)), forms)?;
            let r = stokes_check(&f, &e)?;
            Ok((r.lhs, r.rhs))
        });
        let (a, b) = sides_row(&sides);
        let r = demo.case(&format!("exact/{label}"), "Stokes identity on the exact path", STOKES, rel_residual(&sides), 1e-12);
        exact.rows.push(vec![label.into(), sci(a), sci(b), sci(r)]);
    }
    demo.tables.push(exact);

    let mut conv = Table::new(
        "bump form crossing the circle: |∫_{E_n} dω − ∮_{S¹} ω| on disk meshes",
        vec!["rings", "h", "residual", "ratio"],
    );
    let rows = refinement_form().and_then(|omega| stokes_refinement_study(&omega, 1.0, &refinement_levels(refine)));
    match rows {
        Ok(rows) => {
            for row in rows {
                let ratio = row.ratio.map_or("-".to_string(), |q| format!("{q:.3}"));
                if let Some(q) = row.ratio {
                    demo.case(
                        &format!("refine/{:03}", row.level),
                        "error-reduction ratio per mesh halving; residual is |ratio − 4.3|",
                        STOKES,
                        Ok((q - RATIO_CENTER).abs()),
                        RATIO_HALF_WIDTH,
                    );
                }
                conv.rows.push(vec![row.level.to_string(), format!("{:.4}", row.h), sci(row.residual), ratio]);
            }
        }
        Err(e) => {
            demo.case("refine/error", "refinement study", STOKES, Err(e), RATIO_HALF_WIDTH);
        }
    }
    demo.tables.push(conv);
    "Stokes' theorem for PL submanifolds: exact polynomial path and quadrature refinement."
}

const LINEAR: &str = "Using the linear approximation";

fn action_derivative(demo: &mut Demo) -> &'static str {
    let mut fixed = Table::new("closed-form checks", vec!["check", "computed", "expected", "residual"]);
    let circle = Curve::analytic(0.0, 2.0 * PI, vec![x(0).cos(), x(0).sin()]).and_then(|c| {
        let f = Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![LagrangianDensity::kinetic(2)])?;
        action_eval(&f, &c)
    });
    let sides: Sides = circle.map(|a| (a, 2.0 * PI));
    let (a, b) = sides_row(&sides);
    let r = demo.case("circle", "∫|Ċ|² over the unit circle equals 2π", LINEAR, sides.map(|(a, b)| (a - b).abs()), 1e-10);
    fixed.rows.push(vec!["unit circle action".into(), sci(a), sci(b), sci(r)]);

    let mut rng = demo.rng("linear");
    let amat: Vec<Vec<f64>> = (0..2).map(|_| gen::point(2, 1.0, &mut rng)).collect();
    let sides: Sides = (|| {
        let v = SmoothVectorField::linear(&amat, &[0.0, 0.0])?;
        let c = Curve::analytic(0.0, 1.0, vec![x(0), lifted_core::Expr::zero()])?;
        let f = Cylinder::new(SmoothScalarField::from_expr(1, x(0)), vec![LagrangianDensity::kinetic(2)])?;
        Ok((curve::lifted_derivative(&v, &f)?.eval(&c)?, 2.0 * amat[0][0]))
    })();
    let (a, b) = sides_row(&sides);
    let r = demo.case("linear-field", "v = Ax, L = |y|², C(s) = (s, 0) gives 2A₁₁", LINEAR, sides.map(|(a, b)| rel_one(b, a)), 1e-12);
    fixed.rows.push(vec!["2 A11 for v = Ax".into(), sci(a), sci(b), sci(r)]);
    demo.tables.push(fixed);

    let mut table = Table::new(
        "random action functionals: formula against flow finite difference",
        vec!["case", "k", "d_v F", "finite diff", "residual"],
    );
    for i in 0..10 {
        let id = format!("random/{i:02}");
        let mut rng = demo.rng(&id);
        let k = rng.random_range(1..=2);
        let f = gen::action_functional(k, rng.random_range(1..=2), &mut rng);
        let c = gen::curve(k, &mut rng);
        let v = gen::liftable_field(k, &mut rng);
        let sides: Sides = (|| Ok((curve::lifted_derivative(&v, &f)?.eval(&c)?, curve::flow_fd_derivative(&f, &v, &c, FD_STEP)?)))();
        let (a, b) = sides_row(&sides);
        let r = demo.case(&id, "lifted derivative against transported-curve difference", LINEAR, sides.map(|(a, b)| rel_one(a, b)), 1e-5);
        table.rows.push(vec![i.to_string(), k.to_string(), sci(a), sci(b), sci(r)]);
    }
    demo.tables.push(table);
    "Action functionals on curves and the prolonged vector field v†."
}

fn mapping_derivative(demo: &mut Demo) -> &'static str {
    let mut table = Table::new(
        "mapping functionals: formula against flow finite difference, and embedding pullback",
        vec!["case", "m", "d_v F", "finite diff", "fd residual", "embedding residual"],
    );
    for i in 0..10 {
        let id = format!("{i:02}");
        let mut rng = demo.rng(&id);
        let m = rng.random_range(1..=2);
        let size = rng.random_range(2..=4);
        let f = gen::mapping_function(m, rng.random_range(1..=2), size, &mut rng);
        let p = gen::mapping_point(m, size, &mut rng);
        let v = gen::liftable_field(m, &mut rng);
        let sides: Sides = (|| Ok((mapping::lifted_derivative(&v, &f)?.eval(&p)?, mapping::flow_fd_derivative(&f, &v, &p, FD_STEP)?)))();
        let (a, b) = sides_row(&sides);
        let r = demo.case(&format!("{id}/flow"), "lifted derivative against composed-flow difference", "if ξ:R^{2n}→R is defined by", sides.map(|(a, b)| rel_one(a, b)), 1e-5);

        let emb = gen::embedding(1, 2, &mut rng);
        let g = gen::mapping_function(2, 1, size, &mut rng);
        let p1 = gen::mapping_point(1, size, &mut rng);
        let v1 = gen::liftable_field(1, &mut rng);
        let er = mapping::embedding_diff_residual(&emb, &v1, &g, &p1).map(|(res, s)| rel_scale(res, s));
        let e = demo.case(&format!("{id}/embedding"), "embedding pullback differentiates as the pushed field", "Thus Υ̂ is differentiable", er, 1e-9);
        table.rows.push(vec![id, m.to_string(), sci(a), sci(b), sci(r), sci(e)]);
    }
    demo.tables.push(table);
    "Lifted derivatives of functionals on mappings Y → ℝᵐ."
}
