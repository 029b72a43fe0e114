//! Bernoulli reverse-KL flow with importance-ratio clipping.
//!
//! The student keeps a single logit `theta = logit q` for its modal mass.
//! Deterministic runs Euler-integrate the expected update; stochastic runs
//! draw one token per step.

pub mod config;
pub mod dynamics;
pub mod simulate;
pub mod sweep;

pub use config::{lambda_warmup_schedule, Estimator, FlowConfig, Mode, Regularizer, UpdateRule};
pub use dynamics::{advantage, expected_flow_rhs, is_ratio, lyapunov, Token};
pub use simulate::{
    simulate, simulate_deterministic, simulate_multitoken, simulate_stochastic, simulate_summary,
    MultiTokenRegime, RunSummary, Trajectory, THETA_LIMIT,
};
pub use sweep::{
    empirical_cliff_midpoint, first_passage_curve, sweep_lambda, BudgetPoint, DriftReport,
    LambdaSummary, Monitored, SweepRow, SweepTable,
};
