//! Per-token advantages, clipped ratios and the expected logit drift for the
//! Bernoulli reduction (modal token vs. the lumped off-modal remainder).

use serde::{Deserialize, Serialize};

use super::config::{Estimator, FlowConfig, Regularizer, UpdateRule};
use crate::prob::{log_sigmoid, logit, sigmoid};
use crate::threshold::logit_clip_boundary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Token {
    Modal,
    OffModal,
}

/// Weighted log-probabilities for one token under teacher, base and student.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TokenLogs {
    pub log_t: f64,
    pub log_b: f64,
    pub log_s: f64,
}

/// Precomputed constants for a config; `lambda` is passed per call so the
/// warmup schedule can vary it.
#[derive(Debug, Clone)]
pub(crate) struct Dynamics {
    rule: UpdateRule,
    estimator: Estimator,
    regularizer: Regularizer,
    c: f64,
    log_p: f64,
    log_1mp: f64,
    log_b: f64,
    log_1mb: f64,
    logit_p: f64,
    logit_b: f64,
    pub logit_qc: f64,
}

impl Dynamics {
    pub fn new(cfg: &FlowConfig) -> Self {
        let r = &cfg.regime;
        Dynamics {
            rule: cfg.update_rule,
            estimator: cfg.estimator,
            regularizer: cfg.regularizer,
            c: r.c(),
            log_p: r.p().ln(),
            log_1mp: (1.0 - r.p()).ln(),
            log_b: r.b().ln(),
            log_1mb: (1.0 - r.b()).ln(),
            logit_p: logit(r.p()),
            logit_b: logit(r.b()),
            logit_qc: logit_clip_boundary(r),
        }
    }

    pub fn bernoulli_logs(&self, tok: Token, theta: f64) -> TokenLogs {
        match tok {
            Token::Modal => TokenLogs {
                log_t: self.log_p,
                log_b: self.log_b,
                log_s: log_sigmoid(theta),
            },
            Token::OffModal => TokenLogs {
                log_t: self.log_1mp,
                log_b: self.log_1mb,
                log_s: log_sigmoid(-theta),
            },
        }
    }

    pub fn advantage(&self, l: TokenLogs, lambda: f64) -> f64 {
        match self.rule {
            UpdateRule::BaseRelative | UpdateRule::AspoFlip => {
                lambda * (l.log_t - l.log_b) - (l.log_s - l.log_b)
            }
            UpdateRule::NoBase => lambda * l.log_t - l.log_s,
        }
    }

    /// Clipped ratio and whether the clip was active.
    pub fn ratio(&self, l: TokenLogs, adv: f64) -> (f64, bool) {
        let raw = if self.rule == UpdateRule::AspoFlip && adv > 0.0 {
            (l.log_s - l.log_t).exp()
        } else {
            (l.log_t - l.log_s).exp()
        };
        if raw > self.c {
            (self.c, true)
        } else {
            (raw, false)
        }
    }

    /// Weight multiplying the score term for this estimator.
    pub fn weight(&self, l: TokenLogs, adv: f64) -> (f64, bool) {
        let (rho, clipped) = self.ratio(l, adv);
        match self.estimator {
            Estimator::ScoreFunction => (1.0, clipped),
            Estimator::IsWeighted => (rho, clipped),
        }
    }

    /// Regularizer contribution to `d theta / dt`.
    pub fn regularizer_drift(&self, theta: f64) -> f64 {
        let s = sigmoid(theta) * sigmoid(-theta);
        match self.regularizer {
            Regularizer::KlToBase { beta } => -beta * (theta - self.logit_b) * s * s,
            Regularizer::EntropyBonus { gamma } => -gamma * theta * s * s,
            Regularizer::None | Regularizer::LambdaWarmup { .. } => 0.0,
        }
    }

    /// Expected `d theta / dt` and whether any token's ratio is clipped.
    pub fn drift(&self, theta: f64, lambda: f64) -> (f64, bool) {
        let q = sigmoid(theta);
        let mut total = 0.0;
        let mut any_clip = false;
        for (tok, mass, grad) in [(Token::Modal, q, 1.0 - q), (Token::OffModal, 1.0 - q, -q)] {
            let l = self.bernoulli_logs(tok, theta);
            let a = self.advantage(l, lambda);
            let (w, clipped) = self.weight(l, a);
            any_clip |= clipped;
            total += mass * w * a * grad;
        }
        (total + self.regularizer_drift(theta), any_clip)
    }

    /// Logit of the unregularised fixed point for this rule.
    pub fn target_logit(&self, lambda: f64) -> f64 {
        match self.rule {
            UpdateRule::BaseRelative | UpdateRule::AspoFlip => {
                lambda * self.logit_p + (1.0 - lambda) * self.logit_b
            }
            UpdateRule::NoBase => lambda * self.logit_p,
        }
    }

    /// `KL(target || student)` for logits `theta_target`, `theta`.
    pub fn kl(&self, theta_target: f64, theta: f64) -> f64 {
        let t = sigmoid(theta_target);
        let (lt, l1t) = (log_sigmoid(theta_target), log_sigmoid(-theta_target));
        let (ls, l1s) = (log_sigmoid(theta), log_sigmoid(-theta));
        let v = t * (lt - ls) + (1.0 - t) * (l1t - l1s);
        v.max(0.0)
    }
}

/// Advantage of `token` at student modal mass `q` with the config's lambda.
pub fn advantage(token: Token, q: f64, cfg: &FlowConfig) -> f64 {
    let d = Dynamics::new(cfg);
    d.advantage(d.bernoulli_logs(token, logit(q)), cfg.lambda)
}

/// Clipped importance ratio `min(c, T/S)`, inverted to `min(c, S/T)` on
/// positive-advantage tokens under the flipped rule.
pub fn is_ratio(token: Token, q: f64, cfg: &FlowConfig) -> f64 {
    let d = Dynamics::new(cfg);
    let l = d.bernoulli_logs(token, logit(q));
    d.ratio(l, d.advantage(l, cfg.lambda)).0
}

/// Expected `d logit(q) / dt` at `q` under `cfg`.
pub fn expected_flow_rhs(q: f64, cfg: &FlowConfig) -> f64 {
    Dynamics::new(cfg).drift(logit(q), cfg.lambda).0
}

/// `KL(p_lambda || q)` against the unregularised fixed point.
pub fn lyapunov(q: f64, cfg: &FlowConfig) -> f64 {
    let d = Dynamics::new(cfg);
    d.kl(d.target_logit(cfg.lambda), logit(q))
}
