use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::aggregate_runs;
use crate::text::{Domain, DomainSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioCategory {
    InDomain,
    CrossDomain,
    CrossDomainAdaptation,
    JointDomain,
}

impl ScenarioCategory {
    pub const ALL: [ScenarioCategory; 4] = [
        ScenarioCategory::InDomain,
        ScenarioCategory::CrossDomain,
        ScenarioCategory::CrossDomainAdaptation,
        ScenarioCategory::JointDomain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioCategory::InDomain => "in-domain",
            ScenarioCategory::CrossDomain => "cross-domain",
            ScenarioCategory::CrossDomainAdaptation => "cross-domain-adaptation",
            ScenarioCategory::JointDomain => "joint-domain",
        }
    }

    pub fn from_name(s: &str) -> Option<ScenarioCategory> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for ScenarioCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn categorize_scenario(d_lm: DomainSet, d_train: DomainSet, d_test: Domain) -> ScenarioCategory {
    match d_train.single() {
        None => ScenarioCategory::JointDomain,
        Some(t) if t == d_test => ScenarioCategory::InDomain,
        Some(_) if d_lm == DomainSet::from(d_test) => ScenarioCategory::CrossDomainAdaptation,
        Some(_) => ScenarioCategory::CrossDomain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScenarioSpec {
    pub d_lm: DomainSet,
    pub d_train: DomainSet,
    pub d_test: Domain,
}

impl ScenarioSpec {
    pub fn new(d_lm: DomainSet, d_train: DomainSet, d_test: Domain) -> Self {
        ScenarioSpec { d_lm, d_train, d_test }
    }

    pub fn category(&self) -> ScenarioCategory {
        categorize_scenario(self.d_lm, self.d_train, self.d_test)
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} -> {}", self.d_lm, self.d_train, self.d_test)
    }
}

/// All 18 cells: 3 LM domains × 3 training domains × 2 test domains.
pub fn grid() -> Vec<ScenarioSpec> {
    let mut out = Vec::with_capacity(18);
    for d_lm in DomainSet::ALL {
        for d_train in DomainSet::ALL {
            for d_test in Domain::ALL {
                out.push(ScenarioSpec::new(d_lm, d_train, d_test));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub runs: Vec<SeedMetrics>,
    pub accuracy_mean: f64,
    pub macro_f1_mean: f64,
    /// `None` with fewer than two runs.
    pub accuracy_std: Option<f64>,
    pub macro_f1_std: Option<f64>,
}

impl ScenarioResult {
    /// Panics on an empty run list.
    pub fn from_runs(spec: ScenarioSpec, runs: Vec<SeedMetrics>) -> Self {
        assert!(!runs.is_empty(), "scenario result needs at least one run");
        let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let mf1: Vec<f64> = runs.iter().map(|r| r.macro_f1).collect();
        let n = runs.len() as f64;
        let (accuracy_std, macro_f1_std) = match (aggregate_runs(&acc), aggregate_runs(&mf1)) {
            (Ok(a), Ok(m)) => (Some(a.1), Some(m.1)),
            _ => (None, None),
        };
        ScenarioResult {
            spec,
            accuracy_mean: acc.iter().sum::<f64>() / n,
            macro_f1_mean: mf1.iter().sum::<f64>() / n,
            accuracy_std,
            macro_f1_std,
            runs,
        }
    }

    pub fn category(&self) -> ScenarioCategory {
        self.spec.category()
    }
}
