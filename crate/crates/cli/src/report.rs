use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseReport {
    pub id: String,
    pub desc: String,
    pub anchor: String,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    pub ms: u64,
    /// Derived case seed; shown in text output, not serialized.
    #[serde(skip)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub cases: Vec<CaseReport>,
    pub summary: Summary,
}

/// Residual recorded when a case errors out; compares above any tolerance.
pub const ERROR_RESIDUAL: f64 = f64::MAX;

impl Report {
    /// Sorts cases by id and recomputes the summary.
    pub fn new(suite: &str, seed: u64, mut cases: Vec<CaseReport>) -> Self {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let mut summary = Summary::default();
        for c in &cases {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Skip => summary.skip += 1,
            }
        }
        Report { suite: suite.into(), seed, cases, summary }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per failure (every case when `verbose`) and a summary line.
    pub fn to_text(&self, verbose: bool) -> String {
        let mut out = String::new();
        for c in &self.cases {
            if verbose || c.status == Status::Fail {
                let status = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Skip => "SKIP",
                };
                out.push_str(&format!(
                    "{status} {:<44} residual {:>10.3e} tol {:>8.1e} seed {:#018x}  {}\n",
                    c.id, c.residual, c.tolerance, c.seed, c.desc
                ));
            }
        }
        out.push_str(&format!(
            "suite {} (seed {}): {} passed, {} failed, {} skipped\n",
            self.suite, self.seed, self.summary.pass, self.summary.fail, self.summary.skip
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(id: &str, status: Status) -> CaseReport {
        CaseReport {
            id: id.into(),
            desc: "d".into(),
            anchor: "a".into(),
            status,
            residual: 0.5,
            tolerance: 1.0,
            ms: 0,
            seed: 9,
        }
    }

    #[test]
    fn schema_field_set_is_exact() {
        let r = Report::new("s", 1, vec![case("b", Status::Fail), case("a", Status::Pass)]);
        assert_eq!(r.cases[0].id, "a");
        assert_eq!(r.summary, Summary { pass: 1, fail: 1, skip: 0 });
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, ["cases", "seed", "suite", "summary"]);
        let ck: Vec<&str> = v["cases"][0].as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(ck, ["anchor", "desc", "id", "ms", "residual", "status", "tolerance"]);
        assert_eq!(v["cases"][1]["status"], "fail");
    }
}
