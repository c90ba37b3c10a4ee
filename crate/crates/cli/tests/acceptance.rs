//! Acceptance run: every criterion at its stated tolerance, one line each.
//! Exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use lifted_cli::report::{CaseReport, Status};
use lifted_cli::suites::submanifold::{RATIO_CENTER, RATIO_HALF_WIDTH};
use lifted_cli::{run_suite, SuiteConfig};

/// What a criterion demands of one case group.
struct Need {
    group: &'static str,
    min_cases: usize,
    max_tolerance: f64,
}

const fn need(group: &'static str, min_cases: usize, max_tolerance: f64) -> Need {
    Need { group, min_cases, max_tolerance }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn check_groups(by_group: &BTreeMap<String, Vec<&CaseReport>>, needs: &[Need]) -> Verdict {
    let mut problems = Vec::new();
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for n in needs {
        let Some(list) = by_group.get(n.group) else {
            problems.push(format!("{} missing", n.group));
            continue;
        };
        cases += list.len();
        if list.len() < n.min_cases {
            problems.push(format!("{} has {} cases, needs {}", n.group, list.len(), n.min_cases));
        }
        for c in list {
            if c.tolerance > n.max_tolerance {
                problems.push(format!("{} runs at tolerance {:e} > {:e}", c.id, c.tolerance, n.max_tolerance));
            }
            if c.status != Status::Pass {
                problems.push(format!("{} {:?} residual {:e}", c.id, c.status, c.residual));
            }
            worst = worst.max(c.residual / n.max_tolerance);
        }
    }
    let pass = problems.is_empty();
    let detail = if pass {
        format!("{cases} cases, worst residual/tolerance {worst:.2e}")
    } else {
        problems.truncate(5);
        problems.join("; ")
    };
    Verdict { pass, detail }
}

/// The refinement case encodes the band [2.6, 6]; also require ≥ 4 levels.
fn check_refinement(by_group: &BTreeMap<String, Vec<&CaseReport>>, levels: usize) -> Verdict {
    let band = (RATIO_CENTER - RATIO_HALF_WIDTH, RATIO_CENTER + RATIO_HALF_WIDTH);
    let ok_band = (band.0 - 2.6).abs() < 1e-12 && (band.1 - 6.0).abs() < 1e-12;
    let v = check_groups(by_group, &[need("submanifold/stokes-refinement", 1, RATIO_HALF_WIDTH)]);
    Verdict {
        pass: v.pass && ok_band && levels >= 4,
        detail: format!("{levels} levels, ratio band [{:.1}, {:.1}]; {}", band.0, band.1, v.detail),
    }
}

fn both(a: Verdict, b: Verdict) -> Verdict {
    Verdict { pass: a.pass && b.pass, detail: format!("{}; {}", a.detail, b.detail) }
}

fn lifted(args: &[&str], envs: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lifted"));
    cmd.args(args).env_remove("LIFTED_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn check_determinism(dir: &Path) -> Verdict {
    let mut problems = Vec::new();
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    let ra = lifted(&["verify", "--suite", "all", "--report", a.to_str().unwrap()], &[]);
    let rb = lifted(&["verify", "--suite", "all", "--report", b.to_str().unwrap()], &[]);
    let (ba, bb) = (std::fs::read(&a).unwrap_or_default(), std::fs::read(&b).unwrap_or_default());
    if ba.is_empty() || ba != bb {
        problems.push("reports differ between identical runs".to_string());
    }
    if ra.status.code() != Some(0) || rb.status.code() != Some(0) {
        problems.push(format!("passing run exited {:?}", ra.status.code()));
    }
    let cfg = dir.join("zero.json");
    std::fs::write(&cfg, r#"{"suite":"curve","tolerances":{"*":0.0}}"#).unwrap();
    let r = lifted(&["verify", "--config", cfg.to_str().unwrap()], &[]);
    if r.status.code() != Some(1) {
        problems.push(format!("zero tolerance exited {:?}, expected 1", r.status.code()));
    }
    for (args, what) in [
        (vec!["verify", "--suite", "no-such-suite"], "unknown suite"),
        (vec!["demo", "stokes-boundary", "--refine", "0"], "demo --refine 0"),
        (vec!["demo", "no-such-demo"], "unknown demo"),
    ] {
        let r = lifted(&args, &[]);
        if r.status.code() != Some(2) {
            problems.push(format!("{what} exited {:?}, expected 2", r.status.code()));
        }
    }
    let pass = problems.is_empty();
    let detail = if pass {
        format!("{} report bytes identical across runs; exit codes 0/1/2 as specified", ba.len())
    } else {
        problems.join("; ")
    };
    Verdict { pass, detail }
}

fn main() {
    let config = SuiteConfig::default();
    let report = run_suite(&config, false).expect("default config runs");
    let mut by_group: BTreeMap<String, Vec<&CaseReport>> = BTreeMap::new();
    for c in &report.cases {
        let group = c.id.rsplit_once('/').map_or(c.id.as_str(), |(g, _)| g);
        by_group.entry(group.to_string()).or_default().push(c);
    }
    let dir = tempfile::tempdir().expect("temp dir");

    let criteria: Vec<(&str, Verdict)> = vec![
        (
            "flow-oracle agreement, measure instance (50 cases, 1e-5)",
            check_groups(&by_group, &[need("measure-core/flow-oracle", 50, 1e-5)]),
        ),
        (
            "flow-oracle agreement, mapping and curve instances (30 cases each, 1e-5)",
            check_groups(&by_group, &[need("mapping/flow-oracle", 30, 1e-5), need("curve/flow-oracle", 30, 1e-5)]),
        ),
        (
            "Lie-compatibility (50 cases per instance, 1e-8 relative)",
            check_groups(
                &by_group,
                &[
                    need("measure-core/lie-compat", 50, 1e-8),
                    need("mapping/lie-compat", 50, 1e-8),
                    need("submanifold/lie-compat", 50, 1e-8),
                    need("curve/lie-compat", 50, 1e-8),
                ],
            ),
        ),
        (
            "derivation laws: Leibniz and linearity in v (50 cases, 1e-9 relative)",
            check_groups(
                &by_group,
                &[
                    need("geometry-core/leibniz", 50, 1e-9),
                    need("geometry-core/linearity", 50, 1e-9),
                    need("measure-core/leibniz", 50, 1e-9),
                    need("measure-core/linearity", 50, 1e-9),
                    need("mapping/leibniz", 50, 1e-9),
                    need("mapping/linearity", 50, 1e-9),
                    need("submanifold/leibniz", 50, 1e-9),
                    need("submanifold/linearity", 50, 1e-9),
                    need("curve/leibniz", 50, 1e-9),
                    need("curve/linearity", 50, 1e-9),
                ],
            ),
        ),
        (
            "exterior algebra: d², graded Leibniz, anticommutativity, Cartan, interior bracket (32 probes, 1e-8)",
            check_groups(
                &by_group,
                &[
                    need("geometry-core/d-squared", 32, 1e-8),
                    need("geometry-core/graded-leibniz", 32, 1e-8),
                    need("geometry-core/wedge-anticommute", 32, 1e-8),
                    need("geometry-core/cartan-magic", 32, 1e-8),
                    need("geometry-core/interior-bracket", 32, 1e-8),
                ],
            ),
        ),
        (
            "degeneracy of (r+1)-forms on r-spans (1e-12)",
            check_groups(&by_group, &[need("geometry-core/degeneracy", 32, 1e-12)]),
        ),
        (
            "gradient duality (10 instances x 20 fields, 1e-9 relative)",
            check_groups(&by_group, &[need("measure-core/gradient-duality", 10, 1e-9)]),
        ),
        (
            "Markovianity of tanh (100 instances, 1e-12) and identity equality",
            check_groups(
                &by_group,
                &[need("measure-core/markov", 100, 1e-12), need("measure-core/markov-equality", 1, 1e-12)],
            ),
        ),
        (
            "Stokes: exact path on square/triangle/disk (1e-12), refinement ratio in [2.6, 6]",
            both(
                check_groups(
                    &by_group,
                    &[
                        need("submanifold/stokes-exact-square", 1, 1e-12),
                        need("submanifold/stokes-exact-triangle", 1, 1e-12),
                        need("submanifold/stokes-exact-disk", 1, 1e-12),
                    ],
                ),
                check_refinement(&by_group, config.params.refine),
            ),
        ),
        (
            "boundary weak differentiability on polynomial forms (1e-10)",
            check_groups(&by_group, &[need("submanifold/weak-diff-exact", 1, 1e-10)]),
        ),
        (
            "functoriality: embedding pullbacks (1e-9), convolution and density (1e-12)",
            check_groups(
                &by_group,
                &[
                    need("measure-core/embedding-diff", 1, 1e-9),
                    need("mapping/embedding-diff", 1, 1e-9),
                    need("measure-core/convolution", 1, 1e-12),
                    need("measure-core/density", 1, 1e-12),
                ],
            ),
        ),
        ("determinism and exit codes", check_determinism(dir.path())),
    ];

    let mut failed = 0;
    for (i, (name, v)) in criteria.iter().enumerate() {
        if !v.pass {
            failed += 1;
        }
        println!("criterion {:>2}: {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
