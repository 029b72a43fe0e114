//! Deterministic repair of duplicate-id lists.

use std::collections::HashSet;

use serde::Serialize;

use super::parse::{FailureMode, Item, ListContract, ParseOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairStatus {
    /// Input was already valid.
    NotNeeded,
    Repaired,
    /// Repair only applies to full-length lists of real ids with valid scores.
    NotRepairable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Repair {
    pub outcome: ParseOutcome,
    pub status: RepairStatus,
}

/// Replace each later occurrence of a duplicated id with a missing id.
/// Missing ids are taken in input order and fill duplicate slots left to
/// right; each slot keeps its score.
pub fn permutation_repair(outcome: &ParseOutcome, contract: &ListContract) -> Repair {
    if outcome.valid {
        return Repair {
            outcome: outcome.clone(),
            status: RepairStatus::NotNeeded,
        };
    }
    let not = || Repair {
        outcome: outcome.clone(),
        status: RepairStatus::NotRepairable,
    };
    if outcome.failure_mode != Some(FailureMode::DuplicateId) || outcome.items.len() != contract.k {
        return not();
    }
    let present: HashSet<&str> = outcome.items.iter().map(|i| i.id.as_str()).collect();
    let mut missing = contract
        .expected_ids
        .iter()
        .filter(|id| !present.contains(id.as_str()));
    let mut seen = HashSet::new();
    let mut items: Vec<Item> = Vec::with_capacity(contract.k);
    for it in &outcome.items {
        if seen.insert(it.id.as_str()) {
            items.push(it.clone());
        } else {
            let Some(id) = missing.next() else {
                return not();
            };
            items.push(Item {
                id: id.clone(),
                score: it.score,
            });
        }
    }
    Repair {
        outcome: ParseOutcome {
            valid: true,
            items,
            failure_mode: None,
            fmc: false,
            n_elements: outcome.n_elements,
        },
        status: RepairStatus::Repaired,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse::parse_strict_k;

    fn contract() -> ListContract {
        ListContract::new(["a", "b", "c", "d"].map(String::from).to_vec(), "review_id").unwrap()
    }

    #[test]
    fn fills_in_input_order_keeping_scores() {
        let c = contract();
        let o = parse_strict_k(
            r#"[{"review_id":"b","score":1},{"review_id":"b","score":2},{"review_id":"c","score":3},{"review_id":"c","score":4}]"#,
            &c,
        );
        let r = permutation_repair(&o, &c);
        assert_eq!(r.status, RepairStatus::Repaired);
        let got: Vec<(&str, f64)> = r
            .outcome
            .items
            .iter()
            .map(|i| (i.id.as_str(), i.score))
            .collect();
        assert_eq!(got, vec![("b", 1.0), ("a", 2.0), ("c", 3.0), ("d", 4.0)]);
    }

    #[test]
    fn valid_is_untouched_and_truncation_refused() {
        let c = contract();
        let ok = parse_strict_k(
            r#"[{"review_id":"a","score":1},{"review_id":"b","score":2},{"review_id":"c","score":3},{"review_id":"d","score":4}]"#,
            &c,
        );
        let r = permutation_repair(&ok, &c);
        assert_eq!(r.status, RepairStatus::NotNeeded);
        assert_eq!(r.outcome, ok);
        let short = parse_strict_k(
            r#"[{"review_id":"a","score":1},{"review_id":"b","score":2},{"review_id":"c","score":3}]"#,
            &c,
        );
        assert_eq!(
            permutation_repair(&short, &c).status,
            RepairStatus::NotRepairable
        );
    }
}
