//! Prompt-level bootstrap for aggregator confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{
    aggregates_of, filter_structural, retained_values, AggregatorKind, AggregatorSpec,
};
use super::trace::TraceSet;
use crate::error::{Error, Result};
use crate::prob::quantile_sorted;

pub const MIN_RESAMPLES: usize = 100;

/// 95% percentile interval plus the point estimate it was built around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ci {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_resamples: usize,
}

impl Ci {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Sufficient statistics of one retained prompt.
#[derive(Debug, Clone)]
pub(crate) struct Unit {
    values: Vec<f64>,
    sum: f64,
    log_sum: f64,
    min: f64,
    max: f64,
    mean: f64,
}

impl Unit {
    pub fn new(values: Vec<f64>) -> Self {
        let sum = values.iter().sum();
        let log_sum = values.iter().map(|v| v.ln()).sum();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = sum / values.len() as f64;
        Unit {
            values,
            sum,
            log_sum,
            min,
            max,
            mean,
        }
    }
}

pub(crate) fn units_of(trace: &TraceSet, tau: f64) -> Result<Vec<Unit>> {
    let f = filter_structural(trace, tau)?;
    Ok(retained_values(&f).into_iter().map(Unit::new).collect())
}

fn resample_stat(kind: AggregatorKind, units: &[Unit], idx: &[usize]) -> f64 {
    let pick = || idx.iter().map(|&i| &units[i]);
    match kind {
        AggregatorKind::Mean => {
            let n: usize = pick().map(|u| u.values.len()).sum();
            pick().map(|u| u.sum).sum::<f64>() / n as f64
        }
        AggregatorKind::GeometricMean => {
            let n: usize = pick().map(|u| u.values.len()).sum();
            (pick().map(|u| u.log_sum).sum::<f64>() / n as f64).exp()
        }
        AggregatorKind::Min => pick().map(|u| u.min).fold(f64::INFINITY, f64::min),
        AggregatorKind::Max => pick().map(|u| u.max).fold(f64::NEG_INFINITY, f64::max),
        AggregatorKind::MaxOfPromptMeans => {
            pick().map(|u| u.mean).fold(f64::NEG_INFINITY, f64::max)
        }
        AggregatorKind::P5 => {
            let mut pooled: Vec<f64> = pick().flat_map(|u| u.values.iter().copied()).collect();
            pooled.sort_by(|a, b| a.total_cmp(b));
            quantile_sorted(&pooled, 0.05)
        }
    }
}

/// Bootstrap over an explicit unit list. Resample `r` draws from the ChaCha
/// stream `r` of `seed`, so output is independent of thread scheduling.
pub(crate) fn bootstrap_units(
    units: &[Unit],
    kind: AggregatorKind,
    n_resamples: usize,
    seed: u64,
) -> Result<Ci> {
    if n_resamples < MIN_RESAMPLES {
        return Err(Error::config(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {n_resamples}"
        )));
    }
    if units.is_empty() {
        return Err(Error::domain("no retained prompts to bootstrap"));
    }
    let slices: Vec<&[f64]> = units.iter().map(|u| u.values.as_slice()).collect();
    let point = aggregates_of(&slices).get(kind);
    if units.len() == 1 {
        return Ok(Ci {
            point,
            lo: point,
            hi: point,
            n_resamples,
        });
    }
    let n = units.len();
    let mut stats: Vec<f64> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            resample_stat(kind, units, &idx)
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    Ok(Ci {
        point,
        lo: quantile_sorted(&stats, 0.025),
        hi: quantile_sorted(&stats, 0.975),
        n_resamples,
    })
}

/// 95% percentile CI for `spec` by resampling prompts with replacement.
pub fn bootstrap_ci(
    trace: &TraceSet,
    spec: &AggregatorSpec,
    n_resamples: usize,
    seed: u64,
) -> Result<Ci> {
    let units = units_of(trace, spec.tau)?;
    bootstrap_units(&units, spec.kind, n_resamples, seed)
}
