//! Seed-by-lambda sweeps, empirical cliff midpoints and the budget drift curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::FlowConfig;
use super::simulate::{simulate_summary, RunSummary};
use crate::error::{Error, Result};
use crate::prereg::rule::{ascending_crossing, RuleKind, ThresholdRule};

/// One `(lambda, seed)` run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub seed: u64,
    pub final_q: f64,
    pub first_passage_step: Option<u64>,
    pub clip_events: u64,
    /// 1 when the run never reached the clip boundary, else 0.
    pub survival: u8,
}

/// Per-lambda aggregate over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub n_seeds: usize,
    pub passage_fraction: f64,
    pub survival_rate: f64,
    pub mean_final_q: f64,
    pub std_final_q: f64,
    pub std_survival: f64,
    /// Mean first-passage step when every seed crossed.
    pub mean_first_passage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Row-major: all seeds for `lambdas[0]`, then `lambdas[1]`, ...
    pub rows: Vec<SweepRow>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl SweepTable {
    pub fn rows_for(&self, i: usize) -> &[SweepRow] {
        let k = self.seeds.len();
        &self.rows[i * k..(i + 1) * k]
    }

    pub fn summary(&self) -> Vec<LambdaSummary> {
        (0..self.lambdas.len())
            .map(|i| {
                let rows = self.rows_for(i);
                let n = rows.len();
                let passed = rows.iter().filter(|r| r.survival == 0).count();
                let (mean_q, std_q) = mean_std(rows.iter().map(|r| r.final_q));
                let (surv, std_s) = mean_std(rows.iter().map(|r| r.survival as f64));
                let mean_fp = if passed == n {
                    Some(
                        rows.iter()
                            .map(|r| r.first_passage_step.unwrap() as f64)
                            .sum::<f64>()
                            / n as f64,
                    )
                } else {
                    None
                };
                LambdaSummary {
                    lambda: self.lambdas[i],
                    n_seeds: n,
                    passage_fraction: passed as f64 / n as f64,
                    survival_rate: surv,
                    mean_final_q: mean_q,
                    std_final_q: std_q,
                    std_survival: std_s,
                    mean_first_passage: mean_fp,
                }
            })
            .collect()
    }

    /// `(lambda, survival_rate)` curve.
    pub fn survival_curve(&self) -> Vec<(f64, f64)> {
        self.summary()
            .iter()
            .map(|s| (s.lambda, s.survival_rate))
            .collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("lambda grid is empty"));
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::config("lambda grid values must be finite and >= 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("lambda grid must be strictly increasing"));
    }
    Ok(())
}

fn row(lambda: f64, seed: u64, s: &RunSummary) -> SweepRow {
    SweepRow {
        lambda,
        seed,
        final_q: s.final_q,
        first_passage_step: s.first_passage_step,
        clip_events: s.clip_event_count,
        survival: s.first_passage_step.is_none() as u8,
    }
}

/// Run `base` at every `(lambda, seed)` pair in parallel. Results do not
/// depend on the worker count.
pub fn sweep_lambda(grid: &[f64], base: &FlowConfig, seeds: &[u64]) -> Result<SweepTable> {
    check_grid(grid)?;
    if seeds.is_empty() {
        return Err(Error::config("seed list is empty"));
    }
    base.validate()?;
    let jobs: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&l| seeds.iter().map(move |&s| (l, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(lambda, seed)| {
            let mut c = *base;
            c.lambda = lambda;
            c.seed = seed;
            simulate_summary(&c).map(|s| row(lambda, seed, &s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        lambdas: grid.to_vec(),
        seeds: seeds.to_vec(),
        rows,
    })
}

/// Which per-lambda statistic a midpoint is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitored {
    /// Fraction of seeds that never crossed; falls with lambda.
    #[default]
    Survival,
    /// Fraction of seeds that crossed; rises with lambda.
    PassageFraction,
}

/// Midpoint of the sweep's cliff under `rule`. Passage fraction uses the
/// mirrored (ascending) crossing of the same level.
pub fn empirical_cliff_midpoint(
    table: &SweepTable,
    rule: &ThresholdRule,
    stat: Monitored,
) -> Result<f64> {
    let summary = table.summary();
    let curve: Vec<(f64, f64)> = match stat {
        Monitored::Survival => summary
            .iter()
            .map(|s| (s.lambda, s.survival_rate))
            .collect(),
        Monitored::PassageFraction => summary
            .iter()
            .map(|s| (s.lambda, s.passage_fraction))
            .collect(),
    };
    let hit = match (stat, rule.kind) {
        (Monitored::Survival, _) => rule.apply(&curve)?,
        (Monitored::PassageFraction, RuleKind::MidpointFractionOfPeak) => {
            let peak = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
            ascending_crossing(&curve, rule.level * peak)
        }
        (Monitored::PassageFraction, RuleKind::MidpointFixedThreshold) => {
            ascending_crossing(&curve, rule.level)
        }
        (Monitored::PassageFraction, _) => rule.apply(&curve)?,
    };
    hit.ok_or_else(|| Error::NoCrossing(format!("{stat:?} curve has no crossing under {rule:?}")))
}

/// Midpoint at one step budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetPoint {
    pub steps: u64,
    pub midpoint: Option<f64>,
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub budgets: Vec<BudgetPoint>,
    /// Mean first-passage step per lambda at the largest budget, when every seed crossed.
    pub n_star: Vec<(f64, Option<f64>)>,
    /// True when defined midpoints never increase with the budget.
    pub leftward: bool,
}

/// Empirical midpoint as a function of step budget. One run per
/// `(lambda, seed)` at the largest budget; a seed counts as passed at
/// budget `N` when its first passage is `<= N`.
pub fn first_passage_curve(
    grid: &[f64],
    budgets: &[u64],
    base: &FlowConfig,
    seeds: &[u64],
    rule: &ThresholdRule,
) -> Result<DriftReport> {
    if budgets.is_empty() || budgets.windows(2).any(|w| w[1] <= w[0]) || budgets[0] == 0 {
        return Err(Error::config(
            "budgets must be non-empty, positive and strictly increasing",
        ));
    }
    let mut c = *base;
    c.steps = *budgets.last().unwrap();
    let table = sweep_lambda(grid, &c, seeds)?;
    let mut points = Vec::with_capacity(budgets.len());
    for &n in budgets {
        let curve: Vec<(f64, f64)> = (0..grid.len())
            .map(|i| {
                let rows = table.rows_for(i);
                let surv = rows
                    .iter()
                    .filter(|r| r.first_passage_step.is_none_or(|k| k > n))
                    .count() as f64
                    / rows.len() as f64;
                (grid[i], surv)
            })
            .collect();
        let mean_surv = curve.iter().map(|c| c.1).sum::<f64>() / curve.len() as f64;
        points.push(BudgetPoint {
            steps: n,
            midpoint: rule.apply(&curve)?,
            survival: mean_surv,
        });
    }
    let mids: Vec<f64> = points.iter().filter_map(|p| p.midpoint).collect();
    let leftward = mids.windows(2).all(|w| w[1] <= w[0]);
    let n_star = table
        .summary()
        .iter()
        .map(|s| (s.lambda, s.mean_first_passage))
        .collect();
    Ok(DriftReport {
        budgets: points,
        n_star,
        leftward,
    })
}
