//! Teacher-trace calibration: structural filtering, aggregators, bootstrap
//! intervals and the predicted threshold bracket.

pub mod aggregate;
pub mod bootstrap;
pub mod bracket;
pub mod tables;
pub mod trace;

pub use aggregate::{
    aggregate, aggregate_all, filter_structural, Aggregates, AggregatorKind, AggregatorSpec,
};
pub use bootstrap::{bootstrap_ci, Ci, MIN_RESAMPLES};
pub use bracket::{
    implied_base, predict_bracket, BaseSource, BracketRequest, ImpliedBase, PredictionBracket,
};
pub use tables::{
    b_sensitivity, class_spread, subsample_variance, BSensitivityRow, ClassRow, ClassSpreadTable,
    SpreadStats, SubsampleRow,
};
pub use trace::{Position, PromptTrace, TraceSet};
