use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::threshold::ClipRegime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// `A = lambda*(log T - log B) - (log S - log B)`.
    BaseRelative,
    /// `A = lambda*log T - log S`.
    NoBase,
    /// Base-relative advantage; the ratio is inverted on positive-advantage tokens.
    AspoFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Plain on-policy score function; the ratio is tracked but not applied.
    ScoreFunction,
    /// Score function weighted by the clipped importance ratio.
    IsWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regularizer {
    #[default]
    None,
    KlToBase {
        beta: f64,
    },
    EntropyBonus {
        gamma: f64,
    },
    /// Linear ramp of lambda from 1 to its target over `warmup_steps`.
    LambdaWarmup {
        warmup_steps: u64,
    },
}

/// One flow run. `q0` defaults to the warmstart mass `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub regime: ClipRegime,
    pub lambda: f64,
    pub eta: f64,
    pub steps: u64,
    pub q0: f64,
    pub update_rule: UpdateRule,
    pub estimator: Estimator,
    pub regularizer: Regularizer,
    pub seed: u64,
    pub mode: Mode,
}

impl FlowConfig {
    pub fn new(regime: ClipRegime, lambda: f64) -> Self {
        FlowConfig {
            regime,
            lambda,
            eta: 1e-3,
            steps: 100_000,
            q0: regime.b(),
            update_rule: UpdateRule::BaseRelative,
            estimator: Estimator::ScoreFunction,
            regularizer: Regularizer::None,
            seed: 0,
            mode: Mode::Deterministic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::config(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.steps == 0 {
            return Err(Error::config("steps must be >= 1"));
        }
        if !(self.q0 > 0.0 && self.q0 < 1.0) {
            return Err(Error::config(format!(
                "q0 must lie in (0, 1), got {}",
                self.q0
            )));
        }
        match self.regularizer {
            Regularizer::None => {}
            Regularizer::KlToBase { beta } => {
                if !(beta.is_finite() && beta >= 0.0) {
                    return Err(Error::config(format!("beta must be >= 0, got {beta}")));
                }
            }
            Regularizer::EntropyBonus { gamma } => {
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return Err(Error::config(format!("gamma must be >= 0, got {gamma}")));
                }
            }
            Regularizer::LambdaWarmup { warmup_steps } => {
                if warmup_steps == 0 || warmup_steps > self.steps {
                    return Err(Error::config(format!(
                        "warmup_steps must lie in [1, steps], got {warmup_steps}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Sharpening coefficient in effect at step `t`.
    pub fn lambda_at(&self, t: u64) -> f64 {
        match self.regularizer {
            Regularizer::LambdaWarmup { warmup_steps } => {
                lambda_warmup_schedule(t, self.lambda, warmup_steps)
            }
            _ => self.lambda,
        }
    }

    /// Key-sorted JSON encoding used for hashing and manifests.
    pub fn canonical_json(&self) -> String {
        crate::manifest::canonical_json(self)
    }
}

/// `lambda_t = 1 + (target - 1) * min(t / warmup, 1)`.
pub fn lambda_warmup_schedule(t: u64, target: f64, warmup_steps: u64) -> f64 {
    if warmup_steps == 0 {
        return target;
    }
    let frac = (t as f64 / warmup_steps as f64).min(1.0);
    1.0 + (target - 1.0) * frac
}
