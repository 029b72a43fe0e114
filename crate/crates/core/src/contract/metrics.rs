//! Rank agreement between predicted scores and gold relevance.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;

use super::parse::Item;
use crate::error::{Error, Result};

pub const NDCG_CUTOFFS: [usize; 4] = [1, 3, 5, 10];

/// Kendall tau-b. `None` when either side is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].partial_cmp(&x[j]).unwrap();
            let dy = y[i].partial_cmp(&y[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx == Equal, dy == Equal) {
                (true, true) => {
                    tx += 1;
                    ty += 1;
                }
                (true, false) => tx += 1,
                (false, true) => ty += 1,
                (false, false) if dx == dy => conc += 1,
                (false, false) => disc += 1,
            }
        }
    }
    let n0 = (n * n.saturating_sub(1) / 2) as i64;
    let den = (((n0 - tx) * (n0 - ty)) as f64).sqrt();
    (den > 0.0).then(|| (conc - disc) as f64 / den)
}

/// NDCG@k with raw gains and `log2(rank + 1)` discount. Ranking sorts by
/// predicted score descending, ties kept in slice order. Zero ideal DCG gives 0.
pub fn ndcg_at(pred: &[f64], gold: &[f64], k: usize) -> f64 {
    assert_eq!(pred.len(), gold.len());
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&a, &b| pred[b].total_cmp(&pred[a]));
    let dcg = |gains: &mut dyn Iterator<Item = f64>| -> f64 {
        gains
            .take(k)
            .enumerate()
            .map(|(i, g)| g / ((i + 2) as f64).log2())
            .sum()
    };
    let got = dcg(&mut order.iter().map(|&i| gold[i]));
    let mut ideal = gold.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg(&mut ideal.into_iter());
    if best == 0.0 {
        0.0
    } else {
        got / best
    }
}

pub fn mae(pred: &[f64], gold: &[f64]) -> f64 {
    assert_eq!(pred.len(), gold.len());
    pred.iter()
        .zip(gold)
        .map(|(p, g)| (p - g).abs())
        .sum::<f64>()
        / pred.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankMetrics {
    pub kendall_tau: Option<f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub mae: f64,
}

/// Metrics for one valid list. Items are ranked in the order given; gold
/// must cover exactly the predicted ids.
pub fn rank_metrics(pred: &[Item], gold: &IndexMap<String, f64>) -> Result<RankMetrics> {
    if pred.len() != gold.len() || pred.is_empty() {
        return Err(Error::Alignment(format!(
            "{} predicted items vs {} gold ids",
            pred.len(),
            gold.len()
        )));
    }
    let mut g = Vec::with_capacity(pred.len());
    for it in pred {
        g.push(
            *gold
                .get(&it.id)
                .ok_or_else(|| Error::Alignment(format!("no gold value for id {}", it.id)))?,
        );
    }
    let p: Vec<f64> = pred.iter().map(|i| i.score).collect();
    Ok(RankMetrics {
        kendall_tau: kendall_tau_b(&p, &g),
        ndcg: NDCG_CUTOFFS
            .iter()
            .map(|&k| (k, ndcg_at(&p, &g, k)))
            .collect(),
        mae: mae(&p, &g),
    })
}
