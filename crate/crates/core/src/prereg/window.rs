//! Locked prediction windows and verdict evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rule::ThresholdRule;
use crate::error::{Error, Result};
use crate::manifest::{canonical_json, sha256_hex};

/// Lambda values closer than this are treated as the same grid point.
pub const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Comparator {
    pub fn holds(&self, observed: f64, threshold: f64) -> bool {
        match self {
            Comparator::Ge => observed >= threshold,
            Comparator::Gt => observed > threshold,
            Comparator::Le => observed <= threshold,
            Comparator::Lt => observed < threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionRole {
    /// Checked after the midpoint; a miss downgrades PASS to PARTIAL.
    Anchor,
    /// Checked first; a miss yields ABSTAIN.
    Precondition,
}

/// `statistic(lambda) <comparator> threshold`. Without `lambda` the value is
/// read from the sweep's baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub role: CriterionRole,
    pub statistic: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub comparator: Comparator,
    pub threshold: f64,
}

/// Everything committed before the sweep runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub name: String,
    /// Statistic the midpoint is read from.
    pub statistic: String,
    pub lo: f64,
    pub hi: f64,
    pub grid: Vec<f64>,
    pub convention: ThresholdRule,
    #[serde(default)]
    pub criteria: Vec<Criterion>,
    /// When false the prediction is that the grid shows no crossing.
    #[serde(default = "yes")]
    pub predicted_crossing: bool,
}

fn yes() -> bool {
    true
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.statistic.is_empty() {
            return Err(Error::config("window name and statistic must be non-empty"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::config(format!(
                "window [{}, {}] is not ordered",
                self.lo, self.hi
            )));
        }
        if self.grid.len() < 2 {
            return Err(Error::config("grid needs at least two points"));
        }
        if self.grid.iter().any(|g| !g.is_finite()) || self.grid.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::config("grid must be finite and strictly increasing"));
        }
        self.convention.validate()?;
        for c in &self.criteria {
            if !c.threshold.is_finite() || c.lambda.is_some_and(|l| !l.is_finite()) {
                return Err(Error::config("criterion values must be finite"));
            }
            if c.role == CriterionRole::Anchor && c.lambda.is_none() {
                return Err(Error::config("anchor criteria need a lambda"));
            }
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        sha256_hex(canonical_json(self).as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockedWindow {
    #[serde(flatten)]
    pub spec: WindowSpec,
    pub lock_digest: String,
}

impl LockedWindow {
    /// Recompute the digest and compare with the recorded one.
    pub fn verify(&self) -> Result<()> {
        let recomputed = self.spec.digest();
        if recomputed != self.lock_digest {
            return Err(Error::DigestMismatch {
                recorded: self.lock_digest.clone(),
                recomputed,
            });
        }
        Ok(())
    }
}

/// Validate and seal a window.
pub fn lock(spec: WindowSpec) -> Result<LockedWindow> {
    spec.validate()?;
    let lock_digest = spec.digest();
    Ok(LockedWindow { spec, lock_digest })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedRow {
    pub lambda: f64,
    pub values: BTreeMap<String, f64>,
}

/// Measured statistics per lambda plus lambda-free baselines.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservedSweep {
    pub rows: Vec<ObservedRow>,
    #[serde(default)]
    pub baselines: BTreeMap<String, f64>,
}

impl ObservedSweep {
    /// Build from `(lambda, value)` pairs of a single statistic.
    pub fn from_pairs(statistic: &str, pairs: &[(f64, f64)]) -> Self {
        ObservedSweep {
            rows: pairs
                .iter()
                .map(|&(lambda, v)| ObservedRow {
                    lambda,
                    values: BTreeMap::from([(statistic.to_string(), v)]),
                })
                .collect(),
            baselines: BTreeMap::new(),
        }
    }

    pub fn value_at(&self, statistic: &str, lambda: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| (r.lambda - lambda).abs() <= GRID_TOL)
            .and_then(|r| r.values.get(statistic).copied())
    }

    fn lookup(&self, c: &Criterion) -> Option<f64> {
        match c.lambda {
            Some(l) => self.value_at(&c.statistic, l),
            None => self.baselines.get(&c.statistic).copied(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Partial,
    Abstain,
}

impl Verdict {
    /// Process exit code for the CLI: 0 on PASS, distinct nonzero otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 20,
            Verdict::Partial => 21,
            Verdict::Abstain => 22,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Partial => "PARTIAL",
            Verdict::Abstain => "ABSTAIN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub criterion: Criterion,
    pub observed: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub window: String,
    pub lock_digest: String,
    pub verdict: Verdict,
    pub midpoint: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub in_window: bool,
    pub criteria: Vec<CriterionResult>,
    pub reason: String,
}

/// Decide a locked window against an observed sweep.
///
/// Order: digest check, coverage, preconditions (ABSTAIN), midpoint and
/// window (FAIL), anchors (PARTIAL), else PASS.
pub fn evaluate_verdict(locked: &LockedWindow, observed: &ObservedSweep) -> Result<VerdictReport> {
    locked.verify()?;
    let spec = &locked.spec;

    let mut curve = Vec::with_capacity(spec.grid.len());
    for &l in &spec.grid {
        let v = observed.value_at(&spec.statistic, l).ok_or_else(|| {
            Error::Coverage(format!("no '{}' value at grid lambda {l}", spec.statistic))
        })?;
        curve.push((l, v));
    }
    let mut results = Vec::with_capacity(spec.criteria.len());
    for c in &spec.criteria {
        let v = observed.lookup(c).ok_or_else(|| {
            Error::Coverage(format!(
                "no '{}' value for criterion at {:?}",
                c.statistic, c.lambda
            ))
        })?;
        results.push(CriterionResult {
            criterion: c.clone(),
            observed: v,
            holds: c.comparator.holds(v, c.threshold),
        });
    }

    let midpoint = spec.convention.apply(&curve)?;
    let in_window = midpoint.is_some_and(|m| m >= spec.lo && m <= spec.hi);
    let failed_pre = results
        .iter()
        .filter(|r| r.criterion.role == CriterionRole::Precondition && !r.holds)
        .count();
    let failed_anchor = results
        .iter()
        .filter(|r| r.criterion.role == CriterionRole::Anchor && !r.holds)
        .count();

    let (verdict, reason) = if failed_pre > 0 {
        (
            Verdict::Abstain,
            format!("{failed_pre} precondition(s) failed"),
        )
    } else if spec.predicted_crossing && midpoint.is_none() {
        (Verdict::Fail, "no crossing on the locked grid".to_string())
    } else if !spec.predicted_crossing && midpoint.is_some() {
        (
            Verdict::Fail,
            "crossing observed where none was predicted".to_string(),
        )
    } else if spec.predicted_crossing && !in_window {
        (
            Verdict::Fail,
            format!(
                "midpoint {} outside [{}, {}]",
                midpoint.unwrap(),
                spec.lo,
                spec.hi
            ),
        )
    } else if failed_anchor > 0 {
        (
            Verdict::Partial,
            format!("{failed_anchor} anchor criterion(s) failed"),
        )
    } else {
        (Verdict::Pass, "all criteria hold".to_string())
    };

    Ok(VerdictReport {
        window: spec.name.clone(),
        lock_digest: locked.lock_digest.clone(),
        verdict,
        midpoint,
        lo: spec.lo,
        hi: spec.hi,
        in_window,
        criteria: results,
        reason,
    })
}
