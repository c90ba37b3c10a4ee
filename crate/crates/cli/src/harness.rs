use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Params, SuiteConfig};
use crate::error::{HarnessError, Result};
use crate::report::{CaseReport, Report, Status, ERROR_RESIDUAL};
use crate::seed::{case_rng, case_seed};

pub enum Outcome {
    Residual(f64),
    Skip(String),
}

pub type CaseFn = fn(&mut ChaCha8Rng, &Params) -> lifted_core::Result<Outcome>;

/// A family of seeded cases sharing one check.
pub struct Group {
    pub name: &'static str,
    pub desc: &'static str,
    pub anchor: &'static str,
    pub count: usize,
    pub tolerance: f64,
    pub run: CaseFn,
}

pub struct Suite {
    pub name: &'static str,
    pub groups: Vec<Group>,
}

pub const SUITE_NAMES: [&str; 6] = ["smooth-core", "geometry-core", "measure-core", "mapping", "submanifold", "curve"];

pub fn suite(name: &str) -> Option<Suite> {
    use crate::suites::*;
    let groups = match name {
        "smooth-core" => smooth::groups(),
        "geometry-core" => geometry::groups(),
        "measure-core" => measure::groups(),
        "mapping" => mapping::groups(),
        "submanifold" => submanifold::groups(),
        "curve" => curve::groups(),
        _ => return None,
    };
    let name = SUITE_NAMES.iter().find(|s| **s == name).copied()?;
    Some(Suite { name, groups })
}

struct Planned<'a> {
    id: String,
    key: String,
    group: &'a Group,
    tolerance: f64,
}

/// Runs `config.suite` (or every suite for `all`). Cases run in parallel; the
/// report is ordered by case id. `ms` stays 0 unless `timings` is set.
pub fn run_suite(config: &SuiteConfig, timings: bool) -> Result<Report> {
    config.validate()?;
    let suites: Vec<Suite> = if config.suite == "all" {
        SUITE_NAMES.iter().filter_map(|s| suite(s)).collect()
    } else {
        vec![suite(&config.suite).ok_or_else(|| {
            HarnessError::usage(format!("unknown suite {:?}; expected one of {} or all", config.suite, SUITE_NAMES.join(", ")))
        })?]
    };
    let mut plan = Vec::new();
    for s in &suites {
        for g in &s.groups {
            let key = format!("{}/{}", s.name, g.name);
            let count = config.count(&key, g.count);
            let tolerance = config.tolerance(&key, g.tolerance);
            for i in 0..count {
                plan.push(Planned { id: format!("{key}/{i:03}"), key: key.clone(), group: g, tolerance });
            }
        }
    }
    for k in config.cases.keys().chain(config.tolerances.keys()) {
        if k != "*" && !plan.iter().any(|p| &p.key == k) && !is_known_group(k) {
            return Err(HarnessError::usage(format!("override key {k:?} names no case group")));
        }
    }
    let params = &config.params;
    let root = config.seed;
    let cases: Vec<CaseReport> = plan
        .par_iter()
        .map(|p| {
            let seed = case_seed(root, &p.id);
            let mut rng = case_rng(root, &p.id);
            let start = Instant::now();
            let outcome = (p.group.run)(&mut rng, params);
            let ms = if timings { start.elapsed().as_millis() as u64 } else { 0 };
            let (status, residual, desc) = match outcome {
                Ok(Outcome::Residual(r)) if r.is_finite() && r <= p.tolerance => (Status::Pass, r, p.group.desc.to_string()),
                Ok(Outcome::Residual(r)) => {
                    let r = if r.is_finite() { r } else { ERROR_RESIDUAL };
                    (Status::Fail, r, p.group.desc.to_string())
                }
                Ok(Outcome::Skip(why)) => (Status::Skip, 0.0, format!("{} (skipped: {why})", p.group.desc)),
                Err(e) => (Status::Fail, ERROR_RESIDUAL, format!("{} (error: {e})", p.group.desc)),
            };
            CaseReport {
                id: p.id.clone(),
                desc,
                anchor: p.group.anchor.to_string(),
                status,
                residual,
                tolerance: p.tolerance,
                ms,
                seed,
            }
        })
        .collect();
    Ok(Report::new(&config.suite, root, cases))
}

fn is_known_group(key: &str) -> bool {
    let Some((s, g)) = key.split_once('/') else { return false };
    suite(s).is_some_and(|s| s.groups.iter().any(|x| x.name == g))
}

/// `|a − b| / (1 + |a|)`.
pub fn rel_one(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs())
}

/// `residual / max(scale, 1)`.
pub fn rel_scale(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}
