//! Implied warmstart mass and the `[lambda*_safe, lambda*_typ]` prediction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_all, neumaier_sum, AggregatorKind, AggregatorSpec};
use super::bootstrap::{bootstrap_ci, Ci};
use super::tables::finite_lam;
use super::trace::TraceSet;
use crate::error::{Error, Result};
use crate::prob::clamp_prob;
use crate::threshold::{lam_star_bracket, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedBase {
    /// `p_typ * exp(-ell)`.
    pub b: f64,
    /// Mean `log(p_teacher / p_warmstart)` over teacher-structural positions.
    pub ell: f64,
    pub p_typ: f64,
    pub n_matched: usize,
    /// Set when `b` had to be clamped into (0, 1).
    pub clamped: bool,
}

/// Warmstart modal mass implied by the teacher/warmstart log ratio on the
/// positions the teacher marks structural (`p_teacher >= tau`).
pub fn implied_base(teacher: &TraceSet, warmstart: &TraceSet, tau: f64) -> Result<ImpliedBase> {
    let agg = aggregate_all(teacher, tau)?;
    if teacher.prompts.len() != warmstart.prompts.len() {
        return Err(Error::Alignment(format!(
            "teacher has {} prompts, warmstart has {}",
            teacher.prompts.len(),
            warmstart.prompts.len()
        )));
    }
    let by_id: HashMap<&str, &super::trace::PromptTrace> = warmstart
        .prompts
        .iter()
        .map(|p| (p.prompt_id.as_str(), p))
        .collect();
    let mut logs = Vec::new();
    for tp in &teacher.prompts {
        let wp = by_id
            .get(tp.prompt_id.as_str())
            .ok_or_else(|| Error::Alignment(format!("warmstart lacks prompt {}", tp.prompt_id)))?;
        if wp.positions.len() != tp.positions.len()
            || wp
                .positions
                .iter()
                .zip(&tp.positions)
                .any(|(a, b)| a.index != b.index)
        {
            return Err(Error::Alignment(format!(
                "prompt {}: teacher and warmstart positions differ",
                tp.prompt_id
            )));
        }
        for (t, w) in tp.positions.iter().zip(&wp.positions) {
            if tau < 1.0 && t.modal_prob >= tau {
                logs.push(t.modal_prob.ln() - w.modal_prob.ln());
            }
        }
    }
    let ell = neumaier_sum(logs.iter().copied()) / logs.len() as f64;
    let b = clamp_prob(agg.mean * (-ell).exp());
    Ok(ImpliedBase {
        b: b.value,
        ell,
        p_typ: agg.mean,
        n_matched: logs.len(),
        clamped: b.clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseSource {
    Override,
    Implied,
    /// Neither an override nor a warmstart trace was given; `b = 1/2`.
    BaseNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketRequest {
    pub tau: f64,
    pub c: f64,
    pub b_override: Option<f64>,
    /// Resamples for the `lambda*_typ` interval; 0 skips it.
    pub n_resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionBracket {
    pub p_typ: f64,
    pub p_safe: f64,
    pub b: f64,
    pub base_source: BaseSource,
    pub implied: Option<ImpliedBase>,
    pub lambda_safe: Threshold,
    pub lambda_typ: Threshold,
    pub p_typ_ci: Option<Ci>,
    /// `[lambda*(p_typ_ci.hi), lambda*(p_typ_ci.lo)]`.
    pub lambda_typ_ci: Option<(f64, f64)>,
}

/// `p_typ` is the pooled mean, `p_safe` the largest per-prompt mean.
pub fn predict_bracket(
    teacher: &TraceSet,
    warmstart: Option<&TraceSet>,
    req: &BracketRequest,
) -> Result<PredictionBracket> {
    let agg = aggregate_all(teacher, req.tau)?;
    let (b, source, implied) = match (req.b_override, warmstart) {
        (Some(b), _) => (b, BaseSource::Override, None),
        (None, Some(w)) => {
            let ib = implied_base(teacher, w, req.tau)?;
            (ib.b, BaseSource::Implied, Some(ib))
        }
        (None, None) => (0.5, BaseSource::BaseNeutral, None),
    };
    let br = lam_star_bracket(agg.mean, agg.max_of_prompt_means, b, req.c)?;
    let (p_typ_ci, lambda_typ_ci) = if req.n_resamples > 0 {
        let spec = AggregatorSpec::new(AggregatorKind::Mean, req.tau)?;
        let ci = bootstrap_ci(teacher, &spec, req.n_resamples, req.seed)?;
        let lam = finite_lam(ci.hi, b, req.c).zip(finite_lam(ci.lo, b, req.c));
        (Some(ci), lam)
    } else {
        (None, None)
    };
    Ok(PredictionBracket {
        p_typ: agg.mean,
        p_safe: agg.max_of_prompt_means,
        b,
        base_source: source,
        implied,
        lambda_safe: br.safe,
        lambda_typ: br.typ,
        p_typ_ci,
        lambda_typ_ci,
    })
}
