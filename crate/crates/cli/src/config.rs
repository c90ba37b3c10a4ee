use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::seed::DEFAULT_SEED;

/// Instance sizes shared by the suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Largest base dimension for random instances.
    pub m: usize,
    /// Largest number of generators of a random cylinder function.
    pub n: usize,
    /// Number of halving levels in the Stokes refinement study.
    pub refine: usize,
    /// Members of a random measure ensemble.
    pub ensemble: usize,
    /// Cells per side of the square mesh used by submanifold flow cases.
    pub mesh: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params { m: 3, n: 3, refine: 4, ensemble: 3, mesh: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: String,
    pub seed: u64,
    /// Case counts keyed by `suite/group`.
    pub cases: BTreeMap<String, usize>,
    /// Tolerances keyed by `suite/group`, or `*` for every case.
    pub tolerances: BTreeMap<String, f64>,
    pub params: Params,
    pub report: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suite: "all".into(),
            seed: DEFAULT_SEED,
            cases: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            params: Params::default(),
            report: None,
        }
    }
}

impl SuiteConfig {
    pub fn for_suite(suite: &str) -> Self {
        SuiteConfig { suite: suite.into(), ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SuiteConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// Tolerances must be finite and non-negative; zero forces failures.
    pub fn validate(&self) -> Result<()> {
        for (k, t) in &self.tolerances {
            if !t.is_finite() || *t < 0.0 {
                return Err(HarnessError::usage(format!("tolerance for {k:?} must be finite and >= 0, got {t}")));
            }
        }
        let p = &self.params;
        if !(1..=3).contains(&p.m) {
            return Err(HarnessError::usage("params.m must be in 1..=3"));
        }
        if !(1..=4).contains(&p.n) {
            return Err(HarnessError::usage("params.n must be in 1..=4"));
        }
        if p.refine == 0 || p.refine > 6 {
            return Err(HarnessError::usage("params.refine must be in 1..=6"));
        }
        if p.ensemble == 0 {
            return Err(HarnessError::usage("params.ensemble must be positive"));
        }
        if p.mesh < 2 {
            return Err(HarnessError::usage("params.mesh must be at least 2"));
        }
        Ok(())
    }

    /// Override for `group_key`, then `*`, else `default`.
    pub fn tolerance(&self, group_key: &str, default: f64) -> f64 {
        self.tolerances
            .get(group_key)
            .or_else(|| self.tolerances.get("*"))
            .copied()
            .unwrap_or(default)
    }

    pub fn count(&self, group_key: &str, default: usize) -> usize {
        self.cases.get(group_key).copied().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SuiteConfig::from_json(r#"{"suite":"curve","sede":3}"#).is_err());
        assert!(SuiteConfig::from_json(r#"{"params":{"m":2,"depth":1}}"#).is_err());
        let c = SuiteConfig::from_json(r#"{"suite":"curve","seed":3,"params":{"m":2}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.params.m, 2);
        assert_eq!(c.params.n, 3);
    }

    #[test]
    fn tolerance_overrides() {
        assert!(SuiteConfig::from_json(r#"{"tolerances":{"*":-1}}"#).is_err());
        let c = SuiteConfig::from_json(r#"{"tolerances":{"*":0,"curve/lie":0.5}}"#).unwrap();
        assert_eq!(c.tolerance("curve/lie", 1e-8), 0.5);
        assert_eq!(c.tolerance("curve/flow-oracle", 1e-5), 0.0);
        assert_eq!(SuiteConfig::default().tolerance("x", 2.0), 2.0);
    }
}
