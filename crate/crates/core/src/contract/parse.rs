//! Strict-K list parsing and failure-mode classification.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::extract::{extract_block, Extracted};
use crate::error::{Error, Result};

/// What a valid output must contain: exactly the `expected_ids`, once each,
/// each with a numeric score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListContract {
    pub k: usize,
    /// Input order; used for repair assignment and ranking tie-breaks.
    pub expected_ids: Vec<String>,
    pub id_key: String,
    pub score_key: String,
    /// Inclusive bounds; scores outside count as non-numeric.
    pub score_range: Option<(f64, f64)>,
}

impl ListContract {
    pub fn new(expected_ids: Vec<String>, id_key: &str) -> Result<Self> {
        let c = ListContract {
            k: expected_ids.len(),
            expected_ids,
            id_key: id_key.to_string(),
            score_key: "score".to_string(),
            score_range: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_score_key(mut self, key: &str) -> Self {
        self.score_key = key.to_string();
        self
    }

    pub fn with_score_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config(format!("bad score range [{lo}, {hi}]")));
        }
        self.score_range = Some((lo, hi));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be >= 1"));
        }
        if self.expected_ids.len() != self.k {
            return Err(Error::config(format!(
                "k = {} but {} expected ids",
                self.k,
                self.expected_ids.len()
            )));
        }
        let uniq: HashSet<&String> = self.expected_ids.iter().collect();
        if uniq.len() != self.k {
            return Err(Error::config("expected ids must be distinct"));
        }
        if self.id_key.is_empty() || self.score_key.is_empty() {
            return Err(Error::config("id and score keys must be non-empty"));
        }
        Ok(())
    }
}

/// Failure modes in priority order (first applicable wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    Malformed,
    /// An array was opened but never closed.
    RunawayPrefix,
    LengthMismatch,
    #[serde(rename = "truncation_k_minus_1")]
    TruncationKMinus1,
    HallucinatedId,
    DuplicateId,
    MissingId,
    NonNumericScore,
}

impl FailureMode {
    pub const ALL: [FailureMode; 8] = [
        FailureMode::Malformed,
        FailureMode::RunawayPrefix,
        FailureMode::LengthMismatch,
        FailureMode::TruncationKMinus1,
        FailureMode::HallucinatedId,
        FailureMode::DuplicateId,
        FailureMode::MissingId,
        FailureMode::NonNumericScore,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FailureMode::Malformed => "malformed",
            FailureMode::RunawayPrefix => "runaway_prefix",
            FailureMode::LengthMismatch => "length_mismatch",
            FailureMode::TruncationKMinus1 => "truncation_k_minus_1",
            FailureMode::HallucinatedId => "hallucinated_id",
            FailureMode::DuplicateId => "duplicate_id",
            FailureMode::MissingId => "missing_id",
            FailureMode::NonNumericScore => "non_numeric_score",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseOutcome {
    pub valid: bool,
    /// Filled whenever every element carried a string id and a usable
    /// score, even if the list then failed the id checks.
    pub items: Vec<Item>,
    pub failure_mode: Option<FailureMode>,
    /// Exactly k-1 real, distinct ids: one input silently dropped.
    pub fmc: bool,
    /// Number of array elements, when the block parsed.
    pub n_elements: Option<usize>,
}

impl ParseOutcome {
    fn fail(mode: FailureMode) -> Self {
        ParseOutcome {
            valid: false,
            items: Vec::new(),
            failure_mode: Some(mode),
            fmc: false,
            n_elements: None,
        }
    }
}

/// Accept JSON numbers and numeric strings; reject non-finite values.
pub(crate) fn score_of(v: &Value) -> Option<f64> {
    let x = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse::<f64>().ok()?,
        _ => return None,
    };
    x.is_finite().then_some(x)
}

/// Parse `text` against `contract` and classify the first failure.
pub fn parse_strict_k(text: &str, contract: &ListContract) -> ParseOutcome {
    let block = match extract_block(text) {
        Extracted::Block(b) => b,
        Extracted::Runaway => return ParseOutcome::fail(FailureMode::RunawayPrefix),
        Extracted::Missing => return ParseOutcome::fail(FailureMode::Malformed),
    };
    let Ok(Value::Array(elems)) = serde_json::from_str::<Value>(block) else {
        return ParseOutcome::fail(FailureMode::Malformed);
    };
    if elems.iter().any(|e| !e.is_object()) {
        return ParseOutcome::fail(FailureMode::Malformed);
    }
    let expected: HashSet<&str> = contract.expected_ids.iter().map(|s| s.as_str()).collect();
    let in_range = |s: f64| {
        contract
            .score_range
            .is_none_or(|(lo, hi)| s >= lo && s <= hi)
    };

    let ids: Vec<Option<&str>> = elems
        .iter()
        .map(|e| e.get(&contract.id_key).and_then(Value::as_str))
        .collect();
    let scores: Vec<Option<f64>> = elems
        .iter()
        .map(|e| {
            e.get(&contract.score_key)
                .and_then(score_of)
                .filter(|&s| in_range(s))
        })
        .collect();
    let all_real = ids
        .iter()
        .all(|id| id.is_some_and(|s| expected.contains(s)));
    let distinct: HashSet<&str> = ids.iter().flatten().copied().collect();
    let has_dup = distinct.len() < ids.iter().flatten().count();
    let n = elems.len();
    let k = contract.k;

    let items: Vec<Item> = if ids.iter().all(Option::is_some) && scores.iter().all(Option::is_some)
    {
        ids.iter()
            .zip(&scores)
            .map(|(id, s)| Item {
                id: id.unwrap().to_string(),
                score: s.unwrap(),
            })
            .collect()
    } else {
        Vec::new()
    };
    let fmc = n + 1 == k && all_real && !has_dup;

    let mode = if n != k && n + 1 != k {
        Some(FailureMode::LengthMismatch)
    } else if n + 1 == k {
        Some(FailureMode::TruncationKMinus1)
    } else if !all_real {
        Some(FailureMode::HallucinatedId)
    } else if has_dup {
        Some(FailureMode::DuplicateId)
    } else if distinct.len() < k {
        Some(FailureMode::MissingId)
    } else if scores.iter().any(Option::is_none) {
        Some(FailureMode::NonNumericScore)
    } else {
        None
    };
    ParseOutcome {
        valid: mode.is_none(),
        items,
        failure_mode: mode,
        fmc,
        n_elements: Some(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contract() -> ListContract {
        ListContract::new(vec!["a".into(), "b".into(), "c".into()], "review_id").unwrap()
    }

    fn mode(text: &str) -> Option<FailureMode> {
        parse_strict_k(text, &contract()).failure_mode
    }

    #[test]
    fn valid_with_prose_and_string_scores() {
        let o = parse_strict_k(
            r#"Here: [{"review_id":"b","score":"4.5"},{"review_id":"a","score":3},{"review_id":"c","score":1e0}] ok"#,
            &contract(),
        );
        assert!(o.valid, "{o:?}");
        assert_eq!(
            o.items[0],
            Item {
                id: "b".into(),
                score: 4.5
            }
        );
    }

    #[test]
    fn classification_order() {
        assert_eq!(mode("nothing"), Some(FailureMode::Malformed));
        assert_eq!(
            mode("[{\"review_id\":\"a\""),
            Some(FailureMode::RunawayPrefix)
        );
        assert_eq!(mode("[1, 2, 3]"), Some(FailureMode::Malformed));
        assert_eq!(
            mode("[{\"review_id\":\"a\",\"score\":1},]"),
            Some(FailureMode::Malformed)
        );
        assert_eq!(
            mode(r#"[{"review_id":"a","score":1}]"#),
            Some(FailureMode::LengthMismatch)
        );
        assert_eq!(
            mode(r#"[{"review_id":"a","score":1},{"review_id":"zz","score":1}]"#),
            Some(FailureMode::TruncationKMinus1)
        );
        assert_eq!(
            mode(
                r#"[{"review_id":"a","score":1},{"review_id":"zz","score":1},{"review_id":"a","score":"x"}]"#
            ),
            Some(FailureMode::HallucinatedId)
        );
        assert_eq!(
            mode(
                r#"[{"review_id":"a","score":1},{"review_id":"b","score":1},{"review_id":"a","score":"x"}]"#
            ),
            Some(FailureMode::DuplicateId)
        );
        assert_eq!(
            mode(
                r#"[{"review_id":"a","score":1},{"review_id":"b","score":1},{"review_id":"c","score":"high"}]"#
            ),
            Some(FailureMode::NonNumericScore)
        );
        assert_eq!(
            mode(r#"[{"position":1,"score":1},{"position":2,"score":1},{"position":3,"score":1}]"#),
            Some(FailureMode::HallucinatedId)
        );
    }

    #[test]
    fn fmc_flags_silent_drop() {
        let o = parse_strict_k(
            r#"[{"review_id":"c","score":1},{"review_id":"a","score":2}]"#,
            &contract(),
        );
        assert!(o.fmc);
        assert_eq!(o.failure_mode, Some(FailureMode::TruncationKMinus1));
        let o = parse_strict_k(
            r#"[{"review_id":"a","score":1},{"review_id":"a","score":2}]"#,
            &contract(),
        );
        assert!(!o.fmc);
    }

    #[test]
    fn range_violations_count_as_non_numeric() {
        let c = contract().with_score_range(1.0, 5.0).unwrap();
        let o = parse_strict_k(
            r#"[{"review_id":"a","score":1},{"review_id":"b","score":5},{"review_id":"c","score":5.5}]"#,
            &c,
        );
        assert_eq!(o.failure_mode, Some(FailureMode::NonNumericScore));
    }

    #[test]
    fn non_finite_strings_rejected() {
        assert_eq!(score_of(&Value::String("NaN".into())), None);
        assert_eq!(score_of(&Value::String(" inf".into())), None);
        assert_eq!(score_of(&Value::String(" 2.5 ".into())), Some(2.5));
    }

    #[test]
    fn alternate_id_key() {
        let c = ListContract::new(vec!["p1".into(), "p2".into()], "passage_id").unwrap();
        let o = parse_strict_k(
            r#"[{"passage_id":"p2","score":0.1},{"passage_id":"p1","score":0.9}]"#,
            &c,
        );
        assert!(o.valid);
    }
}
