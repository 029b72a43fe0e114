//! Strict-K list contracts: extraction, parsing, failure modes, repair and
//! ranking metrics.

pub mod corpus;
pub mod extract;
pub mod metrics;
pub mod parse;
pub mod repair;

pub use corpus::{
    corpus_from_jsonl_str, evaluate_corpus, read_corpus_jsonl, ContractTemplate, CorpusRecord,
    CorpusReport, MetricsRecord, RecordOutcome,
};
pub use extract::{extract_block, Extracted};
pub use metrics::{kendall_tau_b, mae, ndcg_at, rank_metrics, RankMetrics, NDCG_CUTOFFS};
pub use parse::{parse_strict_k, FailureMode, Item, ListContract, ParseOutcome};
pub use repair::{permutation_repair, Repair, RepairStatus};
