//! Result records and per-claim checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub fn code_version() -> String {
    format!("phlab-harness {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The claim does not apply to this map (reported, not asserted).
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// Measured value and the threshold it is compared with, when numeric.
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            measured: None,
            threshold: None,
            detail: detail.into(),
        }
    }

    /// Passes when `measured < threshold`.
    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            status: if measured < threshold { Status::Pass } else { Status::Fail },
            measured: Some(measured),
            threshold: Some(threshold),
            detail: format!("{measured:e} < {threshold:e}"),
        }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            status: if measured >= threshold { Status::Pass } else { Status::Fail },
            measured: Some(measured),
            threshold: Some(threshold),
            detail: format!("{measured} >= {threshold}"),
        }
    }

    pub fn not_applicable(name: &str, detail: impl Into<String>) -> Self {
        Check { name: name.into(), status: Status::NotApplicable, measured: None, threshold: None, detail: detail.into() }
    }

    /// A sub-computation that errored.
    pub fn error(name: &str, e: impl std::fmt::Display) -> Self {
        Check::new(name, false, format!("error: {e}"))
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// One experiment outcome. Wall-clock time is kept out of the serialized form so
/// that reruns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub experiment: String,
    pub experiment_id: String,
    pub config_hash: String,
    pub map: phlab::maps::MapSpec,
    pub seed: u64,
    pub scalars: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Detail artifact (JSONL or CSV), relative to the output directory.
    pub detail: Option<String>,
    pub code_version: String,
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl ResultRecord {
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(Check::failed)
    }

    /// One line for the terminal: `experiment id status key=value ...`.
    pub fn summary_line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("{} {} {} hash={}", self.experiment, self.experiment_id, status, &self.config_hash[..12]);
        for (k, v) in &self.scalars {
            s.push_str(&format!(" {k}={v:.6e}"));
        }
        let failed: Vec<&str> = self.checks.iter().filter(|c| c.failed()).map(|c| c.name.as_str()).collect();
        if !failed.is_empty() {
            s.push_str(&format!(" failed=[{}]", failed.join(",")));
        }
        s.push_str(&format!(" wall={:.2}s", self.wall_clock_s));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare() {
        assert!(!Check::below("x", 1.0, 2.0).failed());
        assert!(Check::below("x", 2.0, 2.0).failed());
        assert!(!Check::at_least("x", 2.0, 2.0).failed());
        assert!(!Check::not_applicable("x", "").failed());
    }

    #[test]
    fn wall_clock_is_not_serialized() {
        let r = ResultRecord {
            schema_version: SCHEMA_VERSION,
            experiment: "verify".into(),
            experiment_id: "t".into(),
            config_hash: "0".repeat(64),
            map: phlab::MapFamily::shub_wilkinson(0.0, 0.0).spec(),
            seed: 1,
            scalars: BTreeMap::new(),
            checks: vec![],
            detail: None,
            code_version: code_version(),
            wall_clock_s: 3.5,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert!(!text.contains("wall"));
        let back: ResultRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back.wall_clock_s, 0.0);
        assert!(back.passed());
    }
}
