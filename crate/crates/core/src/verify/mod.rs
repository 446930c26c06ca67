//! Certification suites: every checkable identity becomes a residual
//! compared against a tolerance from the run configuration.

mod geometry;
pub mod manifest;
mod operators;
mod regimes;
pub mod special;

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::constants::{ConstantsTable, Geometry};
use crate::{Result, CVec2};

pub use manifest::{Bound, CheckSpec, CRITERIA, MANIFEST};
pub use special::{Slice, SliceSpec, SpecialPoints};
pub(crate) use operators::PROBE_X;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub criterion: u8,
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
    pub samples: usize,
    pub metadata: Value,
}

impl CheckResult {
    fn new(cfg: &RunConfig, name: &str, residual: f64, samples: usize, metadata: Value) -> Self {
        let spec = manifest::spec(name).unwrap_or_else(|| panic!("check `{name}` missing from the manifest"));
        let tolerance = cfg.tolerance(name);
        let passed = match spec.bound {
            Bound::Upper => residual < tolerance,
            Bound::Lower => residual > tolerance,
        };
        CheckResult {
            name: name.to_string(),
            criterion: spec.criterion,
            residual,
            tolerance,
            bound: spec.bound,
            passed,
            samples,
            metadata,
        }
    }

    /// A check whose computation itself failed.
    fn errored(cfg: &RunConfig, name: &str, err: &crate::Error) -> Self {
        let spec = manifest::spec(name).unwrap_or_else(|| panic!("check `{name}` missing from the manifest"));
        let residual = match spec.bound {
            Bound::Upper => f64::INFINITY,
            Bound::Lower => 0.0,
        };
        let mut r = CheckResult::new(cfg, name, residual, 0, json!({ "error": err.to_string() }));
        r.passed = false;
        r
    }
}

/// Outcome of one computed check before it is compared with its tolerance.
pub(crate) struct Measured {
    pub residual: f64,
    pub samples: usize,
    pub metadata: Value,
}

impl Measured {
    pub fn new(residual: f64, samples: usize, metadata: Value) -> Self {
        Measured {
            residual,
            samples,
            metadata,
        }
    }
}

pub(crate) fn record(cfg: &RunConfig, name: &str, m: Result<Measured>) -> CheckResult {
    match m {
        Ok(m) => CheckResult::new(cfg, name, m.residual, m.samples, m.metadata),
        Err(e) => CheckResult::errored(cfg, name, &e),
    }
}

/// Which reality/smoothness regime to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Theorem1,
    Theorem2,
    All,
}

/// Shared state of a verification run.
pub struct Suite {
    pub cfg: RunConfig,
    pub geo: Arc<Geometry>,
    pub table: Arc<ConstantsTable>,
    pub special: SpecialPoints,
}

impl Suite {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let geo = Arc::new(Geometry::from_branch(cfg.branch)?);
        let table = Arc::new(ConstantsTable::compute(&geo)?);
        let special = SpecialPoints::locate(&geo);
        Ok(Suite {
            cfg,
            geo,
            table,
            special,
        })
    }

    /// `c'` of the section-2 bases: configured, or the half-period one.
    pub fn cprime(&self) -> CVec2 {
        self.cfg.cprime.unwrap_or(self.special.cprime)
    }

    pub fn run(&self, regime: Regime) -> Vec<CheckResult> {
        let mut out = geometry::run(self);
        out.extend(operators::run(self));
        if matches!(regime, Regime::Theorem2 | Regime::All) {
            out.extend(regimes::theorem2(self));
        }
        if matches!(regime, Regime::Theorem1 | Regime::All) {
            out.extend(regimes::theorem1(self));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionSummary {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<String>,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub config: Value,
    pub regime: Regime,
    pub special_points: Value,
    pub checks: Vec<CheckResult>,
    pub criteria: Vec<CriterionSummary>,
    pub overall: bool,
}

/// Groups results by criterion; a criterion without checks in this run is
/// left out.
pub fn summarize(results: &[CheckResult]) -> Vec<CriterionSummary> {
    CRITERIA
        .iter()
        .filter_map(|&(id, title)| {
            let mine: Vec<&CheckResult> = results.iter().filter(|r| r.criterion == id).collect();
            if mine.is_empty() {
                return None;
            }
            Some(CriterionSummary {
                id,
                title,
                passed: mine.iter().all(|r| r.passed),
                checks: mine.iter().map(|r| r.name.clone()).collect(),
                failed: mine.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect(),
            })
        })
        .collect()
}

pub fn emit_report(suite: &Suite, results: Vec<CheckResult>, regime: Regime) -> Report {
    let criteria = summarize(&results);
    Report {
        config_hash: suite.cfg.hash(),
        config: suite.cfg.to_json(),
        regime,
        special_points: suite.special.to_json(),
        overall: results.iter().all(|r| r.passed),
        checks: results,
        criteria,
    }
}

impl Report {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_and_upper_bounds_compare_correctly() {
        let cfg = RunConfig::default();
        assert!(CheckResult::new(&cfg, "fay_residual", 1e-12, 1, Value::Null).passed);
        assert!(!CheckResult::new(&cfg, "fay_residual", 1e-3, 1, Value::Null).passed);
        assert!(CheckResult::new(&cfg, "theorem1_blowup", 12.0, 1, Value::Null).passed);
        assert!(!CheckResult::new(&cfg, "theorem1_blowup", 4.0, 1, Value::Null).passed);
    }

    #[test]
    fn errors_become_failures() {
        let cfg = RunConfig::default();
        let r = record(&cfg, "t4_zero", Err(crate::Error::NoRoot(0.5)));
        assert!(!r.passed);
        assert!(r.metadata["error"].as_str().unwrap().contains("no root"));
    }

    #[test]
    fn summary_flags_the_failing_check() {
        let cfg = RunConfig::default();
        let results = vec![
            CheckResult::new(&cfg, "fay_residual", 1e-12, 1, Value::Null),
            CheckResult::new(&cfg, "fay_refit", 1.0, 1, Value::Null),
        ];
        let s = summarize(&results);
        assert_eq!(s.len(), 1);
        assert!(!s[0].passed);
        assert_eq!(s[0].failed, vec!["fay_refit".to_string()]);
    }
}
