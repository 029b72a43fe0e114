//! Onset, collapse and midpoint readouts on a `(lambda, statistic)` curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Largest grid lambda whose statistic is `>= level`.
    OnsetLastAbove,
    /// Smallest grid lambda whose statistic is `<= level`.
    CollapseFirstBelow,
    /// Interpolated first descending crossing of `level * peak`.
    MidpointFractionOfPeak,
    /// Interpolated first descending crossing of `level`.
    MidpointFixedThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRule {
    pub kind: RuleKind,
    pub level: f64,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule {
            kind: RuleKind::MidpointFractionOfPeak,
            level: 0.5,
        }
    }
}

impl ThresholdRule {
    pub fn new(kind: RuleKind, level: f64) -> Result<Self> {
        let r = ThresholdRule { kind, level };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.level.is_finite() {
            return Err(Error::config("rule level must be finite"));
        }
        if self.kind == RuleKind::MidpointFractionOfPeak && !(self.level > 0.0 && self.level <= 1.0)
        {
            return Err(Error::config(format!(
                "fraction-of-peak level must lie in (0, 1], got {}",
                self.level
            )));
        }
        Ok(())
    }

    /// Apply the rule to a curve. Onset and collapse return a grid point;
    /// midpoints interpolate. `None` means the curve never satisfies the rule.
    pub fn apply(&self, curve: &[(f64, f64)]) -> Result<Option<f64>> {
        check_curve(curve)?;
        Ok(match self.kind {
            RuleKind::OnsetLastAbove => onset_last_above(curve, self.level),
            RuleKind::CollapseFirstBelow => collapse_first_below(curve, self.level),
            RuleKind::MidpointFractionOfPeak => {
                let peak = curve
                    .iter()
                    .map(|&(_, s)| s)
                    .fold(f64::NEG_INFINITY, f64::max);
                descending_crossing(curve, self.level * peak)
            }
            RuleKind::MidpointFixedThreshold => descending_crossing(curve, self.level),
        })
    }
}

fn check_curve(curve: &[(f64, f64)]) -> Result<()> {
    if curve.is_empty() {
        return Err(Error::config("empty curve"));
    }
    for w in curve.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::config("curve lambdas must be strictly increasing"));
        }
    }
    if curve.iter().any(|&(l, s)| !l.is_finite() || !s.is_finite()) {
        return Err(Error::config("curve contains non-finite values"));
    }
    Ok(())
}

pub fn onset_last_above(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    curve
        .iter()
        .rev()
        .find(|&&(_, s)| s >= level)
        .map(|&(l, _)| l)
}

pub fn collapse_first_below(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    curve.iter().find(|&&(_, s)| s <= level).map(|&(l, _)| l)
}

/// First adjacent pair with `s_i >= t >= s_{i+1}` and `s_i > s_{i+1}`,
/// linearly interpolated.
pub fn descending_crossing(curve: &[(f64, f64)], t: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let (l0, s0) = w[0];
        let (l1, s1) = w[1];
        if s0 >= t && t >= s1 && s0 > s1 {
            Some(l0 + (s0 - t) / (s0 - s1) * (l1 - l0))
        } else {
            None
        }
    })
}

/// First adjacent pair with `s_i <= t <= s_{i+1}` and `s_i < s_{i+1}`.
pub fn ascending_crossing(curve: &[(f64, f64)], t: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let (l0, s0) = w[0];
        let (l1, s1) = w[1];
        if s0 <= t && t <= s1 && s0 < s1 {
            Some(l0 + (t - s0) / (s1 - s0) * (l1 - l0))
        } else {
            None
        }
    })
}
