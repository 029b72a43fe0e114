//! Structural filtering and pooled aggregators over retained positions.

use serde::{Deserialize, Serialize};

use super::trace::{PromptTrace, TraceSet};
use crate::error::{Error, Result};
use crate::prob::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    /// Mean over all retained tokens, pooled across prompts.
    Mean,
    GeometricMean,
    Min,
    /// Type-7 5th percentile of pooled tokens.
    P5,
    /// Largest per-prompt mean.
    MaxOfPromptMeans,
    /// Largest single retained token.
    Max,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 6] = [
        AggregatorKind::Mean,
        AggregatorKind::GeometricMean,
        AggregatorKind::Min,
        AggregatorKind::P5,
        AggregatorKind::MaxOfPromptMeans,
        AggregatorKind::Max,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregatorSpec {
    pub kind: AggregatorKind,
    pub tau: f64,
}

impl AggregatorSpec {
    pub fn new(kind: AggregatorKind, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(AggregatorSpec { kind, tau })
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::domain(format!("tau must lie in [0, 1], got {tau}")));
    }
    Ok(())
}

/// Keep positions with `modal_prob >= tau`. At `tau = 1` nothing is kept.
pub fn filter_structural(trace: &TraceSet, tau: f64) -> Result<TraceSet> {
    check_tau(tau)?;
    let keep = |p: f64| tau < 1.0 && p >= tau;
    Ok(TraceSet {
        prompts: trace
            .prompts
            .iter()
            .map(|pt| PromptTrace {
                prompt_id: pt.prompt_id.clone(),
                positions: pt
                    .positions
                    .iter()
                    .copied()
                    .filter(|p| keep(p.modal_prob))
                    .collect(),
            })
            .collect(),
        source_label: trace.source_label.clone(),
    })
}

/// Compensated (Neumaier) sum.
pub(crate) fn neumaier_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean shifted by the first element; exact on constant input.
pub(crate) fn shifted_mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + neumaier_sum(xs.iter().map(|x| x - x0)) / xs.len() as f64
}

/// All aggregators at once on a set of non-empty retained prompts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean: f64,
    pub geometric_mean: f64,
    pub min: f64,
    pub p5: f64,
    pub max_of_prompt_means: f64,
    pub max: f64,
    pub n_positions: usize,
    pub n_prompts: usize,
}

impl Aggregates {
    pub fn get(&self, kind: AggregatorKind) -> f64 {
        match kind {
            AggregatorKind::Mean => self.mean,
            AggregatorKind::GeometricMean => self.geometric_mean,
            AggregatorKind::Min => self.min,
            AggregatorKind::P5 => self.p5,
            AggregatorKind::MaxOfPromptMeans => self.max_of_prompt_means,
            AggregatorKind::Max => self.max,
        }
    }
}

/// Aggregates over prompt value slices. Slices must be non-empty.
pub(crate) fn aggregates_of(prompts: &[&[f64]]) -> Aggregates {
    let mut pooled: Vec<f64> = prompts.iter().flat_map(|p| p.iter().copied()).collect();
    let mean = shifted_mean(&pooled);
    let log_mean = neumaier_sum(pooled.iter().map(|x| x.ln())) / pooled.len() as f64;
    pooled.sort_by(|a, b| a.total_cmp(b));
    let min = pooled[0];
    let max = pooled[pooled.len() - 1];
    let p5 = quantile_sorted(&pooled, 0.05);
    // AM-GM bounds; the guard only absorbs last-ulp rounding.
    let geometric_mean = log_mean.exp().max(min).min(mean);
    let mopm = prompts
        .iter()
        .map(|p| shifted_mean(p))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(mean);
    Aggregates {
        mean,
        geometric_mean,
        min,
        p5,
        max_of_prompt_means: mopm,
        max,
        n_positions: pooled.len(),
        n_prompts: prompts.len(),
    }
}

/// Filter at `tau` and compute every aggregator. Errors on an empty retained set.
pub fn aggregate_all(trace: &TraceSet, tau: f64) -> Result<Aggregates> {
    let f = filter_structural(trace, tau)?;
    let vals = retained_values(&f);
    if vals.is_empty() {
        return Err(Error::domain(format!(
            "no positions retained at tau = {tau}"
        )));
    }
    let slices: Vec<&[f64]> = vals.iter().map(|v| v.as_slice()).collect();
    Ok(aggregates_of(&slices))
}

pub fn aggregate(trace: &TraceSet, spec: &AggregatorSpec) -> Result<f64> {
    aggregate_all(trace, spec.tau).map(|a| a.get(spec.kind))
}

/// Per-prompt value vectors, dropping prompts with nothing retained.
pub(crate) fn retained_values(filtered: &TraceSet) -> Vec<Vec<f64>> {
    filtered
        .prompts
        .iter()
        .map(|p| p.probs().collect::<Vec<_>>())
        .filter(|v| !v.is_empty())
        .collect()
}
