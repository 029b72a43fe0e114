//! Sensitivity tables: subsample CI widths, per-prompt spread, warmstart sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::aggregate::{filter_structural, shifted_mean, AggregatorSpec};
use super::bootstrap::{bootstrap_units, units_of, Unit};
use super::trace::TraceSet;
use crate::error::{Error, Result};
use crate::prob::quantile_sorted;
use crate::threshold::{dlamstar_dlogitb, lam_star, ClipRegime};

/// Finite threshold at `(p, b, c)`, or `None` when undefined or infinite.
pub(crate) fn finite_lam(p: f64, b: f64, c: f64) -> Option<f64> {
    let r = ClipRegime::new(p, b, c).ok()?;
    let t = lam_star(&r);
    (!t.is_infinite()).then(|| t.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsampleRow {
    pub n: usize,
    pub n_subsets: usize,
    pub median_width: f64,
    pub p95_width: f64,
    pub median_lambda_width: Option<f64>,
    pub p95_lambda_width: Option<f64>,
}

const SUBSET_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// For each subset size `n`, draw `n_subsets` prompt subsets without
/// replacement, bootstrap each, and report CI widths for the aggregate and
/// for the induced threshold at `(b, c)`. Subset `0` bootstraps with `seed`
/// itself, so `n` = all prompts and one subset reproduces [`super::bootstrap_ci`].
#[allow(clippy::too_many_arguments)]
pub fn subsample_variance(
    trace: &TraceSet,
    spec: &AggregatorSpec,
    ns: &[usize],
    n_subsets: usize,
    n_resamples: usize,
    b: f64,
    c: f64,
    seed: u64,
) -> Result<Vec<SubsampleRow>> {
    let units = units_of(trace, spec.tau)?;
    if n_subsets == 0 {
        return Err(Error::config("n_subsets must be >= 1"));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        if n == 0 || n > units.len() {
            return Err(Error::config(format!(
                "subset size {n} outside [1, {}] retained prompts",
                units.len()
            )));
        }
        let mut widths = Vec::with_capacity(n_subsets);
        let mut lam_widths = Vec::with_capacity(n_subsets);
        for s in 0..n_subsets as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX - s);
            let mut idx = rand::seq::index::sample(&mut rng, units.len(), n).into_vec();
            idx.sort_unstable();
            let subset: Vec<Unit> = idx.iter().map(|&i| units[i].clone()).collect();
            let sub_seed = seed ^ s.wrapping_mul(SUBSET_SEED_MIX);
            let ci = bootstrap_units(&subset, spec.kind, n_resamples, sub_seed)?;
            widths.push(ci.width());
            if let (Some(a), Some(z)) = (finite_lam(ci.hi, b, c), finite_lam(ci.lo, b, c)) {
                lam_widths.push((z - a).abs());
            }
        }
        widths.sort_by(|a, b| a.total_cmp(b));
        lam_widths.sort_by(|a, b| a.total_cmp(b));
        let lam_ok = lam_widths.len() == n_subsets;
        rows.push(SubsampleRow {
            n,
            n_subsets,
            median_width: quantile_sorted(&widths, 0.5),
            p95_width: quantile_sorted(&widths, 0.95),
            median_lambda_width: lam_ok.then(|| quantile_sorted(&lam_widths, 0.5)),
            p95_lambda_width: lam_ok.then(|| quantile_sorted(&lam_widths, 0.95)),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRow {
    pub prompt_id: String,
    pub n_positions: usize,
    pub mean: f64,
    pub min: f64,
    pub spread: f64,
    pub lambda_at_mean: Option<f64>,
    pub lambda_at_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpreadStats {
    pub mean: f64,
    pub std: f64,
    pub p5: f64,
    pub p95: f64,
    pub max: f64,
}

impl SpreadStats {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let mut s = xs.to_vec();
        s.sort_by(|a, b| a.total_cmp(b));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(SpreadStats {
            mean,
            std,
            p5: quantile_sorted(&s, 0.05),
            p95: quantile_sorted(&s, 0.95),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSpreadTable {
    pub rows: Vec<ClassRow>,
    pub spread: Option<SpreadStats>,
    pub lambda_at_mean: Option<SpreadStats>,
    pub lambda_at_min: Option<SpreadStats>,
}

/// Per-prompt `mean - min` of retained positions and the thresholds they imply.
pub fn class_spread(trace: &TraceSet, tau: f64, b: f64, c: f64) -> Result<ClassSpreadTable> {
    let f = filter_structural(trace, tau)?;
    let mut rows = Vec::new();
    for p in &f.prompts {
        let v: Vec<f64> = p.probs().collect();
        if v.is_empty() {
            continue;
        }
        let mean = shifted_mean(&v);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min).min(mean);
        rows.push(ClassRow {
            prompt_id: p.prompt_id.clone(),
            n_positions: v.len(),
            mean,
            min,
            spread: mean - min,
            lambda_at_mean: finite_lam(mean, b, c),
            lambda_at_min: finite_lam(min, b, c),
        });
    }
    if rows.is_empty() {
        return Err(Error::domain(format!(
            "no positions retained at tau = {tau}"
        )));
    }
    let spreads: Vec<f64> = rows.iter().map(|r| r.spread).collect();
    let lm: Vec<f64> = rows.iter().filter_map(|r| r.lambda_at_mean).collect();
    let ln: Vec<f64> = rows.iter().filter_map(|r| r.lambda_at_min).collect();
    Ok(ClassSpreadTable {
        spread: SpreadStats::of(&spreads),
        lambda_at_mean: SpreadStats::of(&lm),
        lambda_at_min: SpreadStats::of(&ln),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BSensitivityRow {
    pub b: f64,
    pub lambda_star: Option<f64>,
    pub slope_logit_b: Option<f64>,
}

/// Threshold and its logit(b) slope across candidate warmstart masses.
pub fn b_sensitivity(p: f64, c: f64, bs: &[f64]) -> Result<Vec<BSensitivityRow>> {
    bs.iter()
        .map(|&b| {
            let r = ClipRegime::new(p, b, c)?;
            Ok(BSensitivityRow {
                b,
                lambda_star: finite_lam(p, b, c),
                slope_logit_b: dlamstar_dlogitb(&r).ok(),
            })
        })
        .collect()
}
