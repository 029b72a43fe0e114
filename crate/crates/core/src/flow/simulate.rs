//! Deterministic (Euler) and stochastic (single-sample SGD) integration of the
//! logit flow, plus the multi-token categorical check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{FlowConfig, Mode};
use super::dynamics::{Dynamics, Token, TokenLogs};
use crate::error::{Error, Result};
use crate::prob::{clamp_prob, logit, sigmoid};
use crate::threshold::ClipRegime;

/// Logits are confined to `[-THETA_LIMIT, THETA_LIMIT]`.
pub const THETA_LIMIT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub theta_series: Vec<f64>,
    pub q_series: Vec<f64>,
    pub lyapunov_series: Vec<f64>,
    pub first_passage_step: Option<u64>,
    pub clip_event_count: u64,
    /// Set when the logit hit the +-50 guard.
    pub theta_clamped: bool,
}

impl Trajectory {
    pub fn final_q(&self) -> f64 {
        *self
            .q_series
            .last()
            .expect("trajectory has at least one point")
    }
}

/// Endpoint statistics of a run without the per-step series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_q: f64,
    pub final_theta: f64,
    pub first_passage_step: Option<u64>,
    pub clip_event_count: u64,
    pub theta_clamped: bool,
}

trait Recorder {
    fn record(&mut self, theta: f64, lambda: f64);
}

struct NoRecord;
impl Recorder for NoRecord {
    fn record(&mut self, _: f64, _: f64) {}
}

struct Series<'a> {
    dyn_: &'a Dynamics,
    theta: Vec<f64>,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl Recorder for Series<'_> {
    fn record(&mut self, theta: f64, lambda: f64) {
        self.theta.push(theta);
        self.q.push(clamp_prob(sigmoid(theta)).value);
        self.v
            .push(self.dyn_.kl(self.dyn_.target_logit(lambda), theta));
    }
}

fn initial_theta(cfg: &FlowConfig) -> f64 {
    logit(clamp_prob(cfg.q0).value)
}

fn guard(theta: f64, clamped: &mut bool) -> f64 {
    if theta > THETA_LIMIT {
        *clamped = true;
        THETA_LIMIT
    } else if theta < -THETA_LIMIT {
        *clamped = true;
        -THETA_LIMIT
    } else {
        theta
    }
}

/// Shared integration loop. `step_fn` returns `(d theta, clipped)` for one
/// step at `(theta, lambda)`; stochastic runs draw inside it.
fn integrate<R, F>(cfg: &FlowConfig, dyn_: &Dynamics, rec: &mut R, mut step_fn: F) -> RunSummary
where
    R: Recorder,
    F: FnMut(f64, f64) -> (f64, bool),
{
    let mut theta = initial_theta(cfg);
    let mut clamped = false;
    let mut clips = 0u64;
    let mut first_passage = None;
    if theta >= dyn_.logit_qc {
        first_passage = Some(0);
    }
    rec.record(theta, cfg.lambda_at(0));
    for t in 0..cfg.steps {
        let lam = cfg.lambda_at(t);
        let (d, clipped) = step_fn(theta, lam);
        clips += clipped as u64;
        theta = guard(theta + cfg.eta * d, &mut clamped);
        if first_passage.is_none() && theta >= dyn_.logit_qc {
            first_passage = Some(t + 1);
        }
        rec.record(theta, cfg.lambda_at(t + 1));
    }
    RunSummary {
        final_q: clamp_prob(sigmoid(theta)).value,
        final_theta: theta,
        first_passage_step: first_passage,
        clip_event_count: clips,
        theta_clamped: clamped,
    }
}

fn stochastic_step(dyn_: &Dynamics, rng: &mut ChaCha8Rng, theta: f64, lam: f64) -> (f64, bool) {
    let q = sigmoid(theta);
    let u: f64 = rng.random();
    let (tok, grad) = if u < q {
        (Token::Modal, 1.0 - q)
    } else {
        (Token::OffModal, -q)
    };
    let l = dyn_.bernoulli_logs(tok, theta);
    let a = dyn_.advantage(l, lam);
    let (w, clipped) = dyn_.weight(l, a);
    (w * a * grad + dyn_.regularizer_drift(theta), clipped)
}

fn run<R: Recorder>(cfg: &FlowConfig, dyn_: &Dynamics, rec: &mut R) -> RunSummary {
    match cfg.mode {
        Mode::Deterministic => integrate(cfg, dyn_, rec, |th, lam| dyn_.drift(th, lam)),
        Mode::Stochastic => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            integrate(cfg, dyn_, rec, |th, lam| {
                stochastic_step(dyn_, &mut rng, th, lam)
            })
        }
    }
}

fn record_run(cfg: &FlowConfig, dyn_: &Dynamics) -> Trajectory {
    let n = cfg.steps as usize + 1;
    let mut rec = Series {
        dyn_,
        theta: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
    };
    let s = run(cfg, dyn_, &mut rec);
    Trajectory {
        theta_series: rec.theta,
        q_series: rec.q,
        lyapunov_series: rec.v,
        first_passage_step: s.first_passage_step,
        clip_event_count: s.clip_event_count,
        theta_clamped: s.theta_clamped,
    }
}

/// Euler integration of the expected flow. Ignores `cfg.mode`.
pub fn simulate_deterministic(cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut c = *cfg;
    c.mode = Mode::Deterministic;
    Ok(record_run(&c, &Dynamics::new(&c)))
}

/// One sampled token per step from `S`, seeded by `cfg.seed`. Ignores `cfg.mode`.
pub fn simulate_stochastic(cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut c = *cfg;
    c.mode = Mode::Stochastic;
    Ok(record_run(&c, &Dynamics::new(&c)))
}

/// Dispatch on `cfg.mode`.
pub fn simulate(cfg: &FlowConfig) -> Result<Trajectory> {
    match cfg.mode {
        Mode::Deterministic => simulate_deterministic(cfg),
        Mode::Stochastic => simulate_stochastic(cfg),
    }
}

/// Same run as [`simulate`] keeping only endpoint statistics.
pub fn simulate_summary(cfg: &FlowConfig) -> Result<RunSummary> {
    cfg.validate()?;
    Ok(run(cfg, &Dynamics::new(cfg), &mut NoRecord))
}

/// `(p, b, c)` plus how the off-modal mass splits across the remaining
/// vocabulary. Teacher, base and student all share the split `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiTokenRegime {
    pub regime: ClipRegime,
    pub alpha: Vec<f64>,
}

impl MultiTokenRegime {
    pub fn new(regime: ClipRegime, alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::domain("alpha must be non-empty"));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::domain("alpha entries must be finite and >= 0"));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("alpha must sum to 1, got {sum}")));
        }
        Ok(MultiTokenRegime { regime, alpha })
    }
}

struct MultiDrift<'a> {
    dyn_: &'a Dynamics,
    log_alpha: Vec<f64>,
    log_p: f64,
    log_1mp: f64,
    log_b: f64,
    log_1mb: f64,
}

impl MultiDrift<'_> {
    /// Sum over every categorical token of `S(a) w(a) A(a) d/dtheta log S(a)`.
    fn drift(&self, theta: f64, lam: f64) -> (f64, bool) {
        let q = sigmoid(theta);
        let ls_m = crate::prob::log_sigmoid(theta);
        let ls_o = crate::prob::log_sigmoid(-theta);
        let mut clip = false;
        let modal = TokenLogs {
            log_t: self.log_p,
            log_b: self.log_b,
            log_s: ls_m,
        };
        let a = self.dyn_.advantage(modal, lam);
        let (w, c) = self.dyn_.weight(modal, a);
        clip |= c;
        let mut total = q * w * a * (1.0 - q);
        for &la in &self.log_alpha {
            let l = TokenLogs {
                log_t: self.log_1mp + la,
                log_b: self.log_1mb + la,
                log_s: ls_o + la,
            };
            let a = self.dyn_.advantage(l, lam);
            let (w, c) = self.dyn_.weight(l, a);
            clip |= c;
            total += (1.0 - q) * la.exp() * w * a * (-q);
        }
        (total + self.dyn_.regularizer_drift(theta), clip)
    }
}

/// Deterministic flow over the full categorical student `S(m) = q`,
/// `S(r) = (1-q)*alpha_r`. Zero-mass tokens are skipped.
pub fn simulate_multitoken(mt: &MultiTokenRegime, cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.mode != Mode::Deterministic {
        return Err(Error::config(
            "multi-token simulation is deterministic only",
        ));
    }
    if cfg.regime != mt.regime {
        return Err(Error::config(
            "config regime differs from multi-token regime",
        ));
    }
    let dyn_ = Dynamics::new(cfg);
    let r = &mt.regime;
    let md = MultiDrift {
        dyn_: &dyn_,
        log_alpha: mt
            .alpha
            .iter()
            .filter(|&&a| a > 0.0)
            .map(|a| a.ln())
            .collect(),
        log_p: r.p().ln(),
        log_1mp: (1.0 - r.p()).ln(),
        log_b: r.b().ln(),
        log_1mb: (1.0 - r.b()).ln(),
    };
    let n = cfg.steps as usize + 1;
    let mut rec = Series {
        dyn_: &dyn_,
        theta: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
    };
    let s = integrate(cfg, &dyn_, &mut rec, |th, lam| md.drift(th, lam));
    Ok(Trajectory {
        theta_series: rec.theta,
        q_series: rec.q,
        lyapunov_series: rec.v,
        first_passage_step: s.first_passage_step,
        clip_event_count: s.clip_event_count,
        theta_clamped: s.theta_clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::config::Estimator;

    fn cfg(lambda: f64) -> FlowConfig {
        let mut c = FlowConfig::new(ClipRegime::new(0.9, 0.5, 5.0).unwrap(), lambda);
        c.steps = 2_000;
        c.eta = 1.0;
        c
    }

    #[test]
    fn series_lengths_are_steps_plus_one() {
        let t = simulate_deterministic(&cfg(1.2)).unwrap();
        assert_eq!(t.q_series.len(), 2_001);
        assert_eq!(t.theta_series.len(), 2_001);
        assert_eq!(t.lyapunov_series.len(), 2_001);
        assert_eq!(t.q_series[0], 0.5);
    }

    #[test]
    fn summary_matches_recorded_run() {
        let mut c = cfg(1.9);
        c.mode = Mode::Stochastic;
        c.eta = 1e-2;
        c.seed = 7;
        c.estimator = Estimator::IsWeighted;
        let t = simulate(&c).unwrap();
        let s = simulate_summary(&c).unwrap();
        assert_eq!(t.final_q(), s.final_q);
        assert_eq!(t.first_passage_step, s.first_passage_step);
        assert_eq!(t.clip_event_count, s.clip_event_count);
    }

    #[test]
    fn first_passage_index_is_minimal() {
        let t = simulate_deterministic(&cfg(2.5)).unwrap();
        let qc = crate::threshold::clip_boundary(&cfg(2.5).regime);
        let k = t.first_passage_step.unwrap() as usize;
        assert!(t.q_series[k] >= qc);
        assert!(t.q_series[..k].iter().all(|&q| q < qc));
    }

    #[test]
    fn theta_guard_flags() {
        let mut flag = false;
        assert_eq!(guard(12.0, &mut flag), 12.0);
        assert!(!flag);
        assert_eq!(guard(-80.0, &mut flag), -THETA_LIMIT);
        assert!(flag);
    }

    #[test]
    fn alpha_must_sum_to_one() {
        let r = ClipRegime::new(0.9, 0.5, 5.0).unwrap();
        assert!(MultiTokenRegime::new(r, vec![0.5, 0.4]).is_err());
        assert!(MultiTokenRegime::new(r, vec![1.2, -0.2]).is_err());
        assert!(MultiTokenRegime::new(r, vec![0.5, 0.5, 0.0]).is_ok());
    }
}
