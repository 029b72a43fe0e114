//! Pre-registered prediction windows: lock, check, verdict.

pub mod rule;
pub mod window;

pub use rule::{RuleKind, ThresholdRule};
pub use window::{
    evaluate_verdict, lock, Comparator, Criterion, CriterionResult, CriterionRole, LockedWindow,
    ObservedSweep, Verdict, VerdictReport, WindowSpec,
};
