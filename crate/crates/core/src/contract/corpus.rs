//! Corpus-level evaluation of strict-K outputs.
//!
//! Corpus JSONL, one record per line:
//! `{"id": "r1", "output": "<raw model text>", "gold": {"a": 3, "b": 1}}`.
//! Gold key order is the input order unless `input_ids` is given.

use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::metrics::{rank_metrics, NDCG_CUTOFFS};
use super::parse::{parse_strict_k, FailureMode, Item, ListContract};
use super::repair::{permutation_repair, RepairStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    pub output: String,
    pub gold: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_ids: Option<Vec<String>>,
}

pub fn read_corpus_jsonl(path: &Path) -> Result<Vec<CorpusRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    corpus_from_jsonl_str(&text, &path.display().to_string())
}

pub fn corpus_from_jsonl_str(text: &str, label: &str) -> Result<Vec<CorpusRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Trace {
                path: label.to_string(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Shared contract settings; ids come from each record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractTemplate {
    /// When set, every record must have exactly this many gold ids.
    pub k: Option<usize>,
    pub id_key: String,
    pub score_key: String,
    pub score_range: Option<(f64, f64)>,
}

impl Default for ContractTemplate {
    fn default() -> Self {
        ContractTemplate {
            k: None,
            id_key: "review_id".into(),
            score_key: "score".into(),
            score_range: None,
        }
    }
}

impl ContractTemplate {
    pub fn contract_for(&self, rec: &CorpusRecord) -> Result<ListContract> {
        let ids: Vec<String> = match &rec.input_ids {
            Some(ids) => ids.clone(),
            None => rec.gold.keys().cloned().collect(),
        };
        if let Some(k) = self.k {
            if ids.len() != k {
                return Err(Error::Alignment(format!(
                    "record {}: {} ids, expected k = {k}",
                    rec.id,
                    ids.len()
                )));
            }
        }
        if ids.len() != rec.gold.len() || ids.iter().any(|i| !rec.gold.contains_key(i)) {
            return Err(Error::Alignment(format!(
                "record {}: input_ids differ from gold ids",
                rec.id
            )));
        }
        let mut c = ListContract::new(ids, &self.id_key)?.with_score_key(&self.score_key);
        if let Some((lo, hi)) = self.score_range {
            c = c.with_score_range(lo, hi)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordOutcome {
    pub id: String,
    pub valid: bool,
    pub failure_mode: Option<FailureMode>,
    pub fmc: bool,
    pub repair: Option<RepairStatus>,
    pub kendall_tau: Option<f64>,
    pub ndcg1: Option<f64>,
}

/// Corpus metrics. Rank metrics average over valid records only and are
/// absent when none parsed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub n_records: usize,
    pub n_valid: usize,
    pub parse_rate: f64,
    pub kendall_tau: Option<f64>,
    /// Records where tau-b was defined.
    pub n_kendall: usize,
    pub ndcg: BTreeMap<usize, Option<f64>>,
    pub mae: Option<f64>,
    /// `parse_rate * ndcg[1]`, 0 when nothing parsed.
    pub u: f64,
    pub fmc_count: usize,
    pub fmc_rate: f64,
    pub repaired_count: usize,
    pub failure_histogram: BTreeMap<FailureMode, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub metrics: MetricsRecord,
    pub records: Vec<RecordOutcome>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Put items in the contract's input order so ranking ties resolve by input order.
fn in_input_order(items: &[Item], contract: &ListContract) -> Vec<Item> {
    contract
        .expected_ids
        .iter()
        .filter_map(|id| items.iter().find(|i| &i.id == id).cloned())
        .collect()
}

/// Parse every record, optionally repair duplicates, and aggregate metrics.
pub fn evaluate_corpus(
    records: &[CorpusRecord],
    template: &ContractTemplate,
    repair: bool,
) -> Result<CorpusReport> {
    let mut outcomes = Vec::with_capacity(records.len());
    let mut taus = Vec::new();
    let mut ndcgs: BTreeMap<usize, Vec<f64>> =
        NDCG_CUTOFFS.iter().map(|&k| (k, Vec::new())).collect();
    let mut maes = Vec::new();
    let mut hist: BTreeMap<FailureMode, usize> = BTreeMap::new();
    let (mut n_valid, mut n_fmc, mut n_rep) = (0, 0, 0);

    for rec in records {
        let contract = template.contract_for(rec)?;
        let parsed = parse_strict_k(&rec.output, &contract);
        n_fmc += parsed.fmc as usize;
        if let Some(m) = parsed.failure_mode {
            *hist.entry(m).or_default() += 1;
        }
        let (final_outcome, rstatus) = if repair {
            let r = permutation_repair(&parsed, &contract);
            n_rep += (r.status == RepairStatus::Repaired) as usize;
            (r.outcome, Some(r.status))
        } else {
            (parsed.clone(), None)
        };
        let mut out = RecordOutcome {
            id: rec.id.clone(),
            valid: final_outcome.valid,
            failure_mode: parsed.failure_mode,
            fmc: parsed.fmc,
            repair: rstatus,
            kendall_tau: None,
            ndcg1: None,
        };
        if final_outcome.valid {
            n_valid += 1;
            let items = in_input_order(&final_outcome.items, &contract);
            let m = rank_metrics(&items, &rec.gold)?;
            if let Some(t) = m.kendall_tau {
                taus.push(t);
            }
            for (k, v) in &m.ndcg {
                ndcgs.get_mut(k).unwrap().push(*v);
            }
            maes.push(m.mae);
            out.kendall_tau = m.kendall_tau;
            out.ndcg1 = m.ndcg.get(&1).copied();
        }
        outcomes.push(out);
    }

    let n = records.len();
    let parse_rate = if n == 0 {
        0.0
    } else {
        n_valid as f64 / n as f64
    };
    let ndcg: BTreeMap<usize, Option<f64>> = ndcgs.iter().map(|(k, v)| (*k, mean(v))).collect();
    let u = parse_rate * ndcg[&1].unwrap_or(0.0);
    Ok(CorpusReport {
        metrics: MetricsRecord {
            n_records: n,
            n_valid,
            parse_rate,
            kendall_tau: mean(&taus),
            n_kendall: taus.len(),
            ndcg,
            mae: mean(&maes),
            u,
            fmc_count: n_fmc,
            fmc_rate: if n == 0 { 0.0 } else { n_fmc as f64 / n as f64 },
            repaired_count: n_rep,
            failure_histogram: hist,
        },
        records: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, output: &str) -> CorpusRecord {
        CorpusRecord {
            id: id.into(),
            output: output.into(),
            gold: [("a".to_string(), 2.0), ("b".to_string(), 1.0)]
                .into_iter()
                .collect(),
            input_ids: None,
        }
    }

    #[test]
    fn all_failed_corpus() {
        let recs = vec![rec("1", "garbage"), rec("2", "[")];
        let r = evaluate_corpus(&recs, &ContractTemplate::default(), false).unwrap();
        assert_eq!(r.metrics.parse_rate, 0.0);
        assert_eq!(r.metrics.u, 0.0);
        assert!(r.metrics.ndcg[&1].is_none());
        assert!(r.metrics.mae.is_none());
        assert_eq!(r.metrics.failure_histogram[&FailureMode::Malformed], 1);
        assert_eq!(r.metrics.failure_histogram[&FailureMode::RunawayPrefix], 1);
    }

    #[test]
    fn repair_lifts_parse_rate() {
        let dup = r#"[{"review_id":"a","score":2},{"review_id":"a","score":1}]"#;
        let recs = vec![rec("1", dup)];
        let t = ContractTemplate::default();
        assert_eq!(
            evaluate_corpus(&recs, &t, false).unwrap().metrics.n_valid,
            0
        );
        let r = evaluate_corpus(&recs, &t, true).unwrap();
        assert_eq!(r.metrics.n_valid, 1);
        assert_eq!(r.metrics.repaired_count, 1);
        assert_eq!(r.metrics.ndcg[&1], Some(1.0));
    }

    #[test]
    fn k_mismatch_is_alignment_error() {
        let t = ContractTemplate {
            k: Some(3),
            ..Default::default()
        };
        assert!(matches!(
            evaluate_corpus(&[rec("1", "[]")], &t, false),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn parses_jsonl() {
        let text = r#"{"id":"x","output":"[]","gold":{"b":1,"a":2}}"#;
        let recs = corpus_from_jsonl_str(text, "mem").unwrap();
        assert_eq!(recs[0].gold.keys().collect::<Vec<_>>(), vec!["b", "a"]);
        assert!(corpus_from_jsonl_str("{\"id\":1}", "mem").is_err());
    }
}
