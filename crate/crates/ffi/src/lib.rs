//! C ABI over `cliffguard`.
//!
//! Every fallible function returns a [`CgStatus`] and writes results through
//! out-pointers. On failure a message is kept per thread and can be read with
//! [`cg_last_error`]. Handles are opaque and must be released with their
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cliffguard::calibration::{aggregate, AggregatorKind, AggregatorSpec, TraceSet};
use cliffguard::contract::{parse_strict_k, FailureMode, ListContract};
use cliffguard::flow::{
    simulate, Estimator, FlowConfig, Mode, Regularizer, Trajectory, UpdateRule,
};
use cliffguard::prereg::{RuleKind, ThresholdRule};
use cliffguard::threshold::{self, ClipRegime};
use cliffguard::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    NoCrossing = 4,
    DigestMismatch = 5,
    /// Malformed input text (UTF-8, JSON, trace lines).
    Parse = 6,
    Other = 7,
    Panic = 8,
}

/// Integer codes for `mode` setters.
pub const CG_MODE_DETERMINISTIC: c_int = 0;
pub const CG_MODE_STOCHASTIC: c_int = 1;

pub const CG_RULE_BASE_RELATIVE: c_int = 0;
pub const CG_RULE_NO_BASE: c_int = 1;
pub const CG_RULE_ASPO_FLIP: c_int = 2;

pub const CG_ESTIMATOR_SCORE_FUNCTION: c_int = 0;
pub const CG_ESTIMATOR_IS_WEIGHTED: c_int = 1;

pub const CG_AGG_MEAN: c_int = 0;
pub const CG_AGG_GEOMETRIC_MEAN: c_int = 1;
pub const CG_AGG_MIN: c_int = 2;
pub const CG_AGG_P5: c_int = 3;
pub const CG_AGG_MAX_OF_PROMPT_MEANS: c_int = 4;
pub const CG_AGG_MAX: c_int = 5;

pub const CG_MIDPOINT_FRACTION_OF_PEAK: c_int = 0;
pub const CG_MIDPOINT_FIXED_THRESHOLD: c_int = 1;
pub const CG_ONSET_LAST_ABOVE: c_int = 2;
pub const CG_COLLAPSE_FIRST_BELOW: c_int = 3;

/// Failure-mode codes written by [`cg_parse_strict_k`]; 0 means valid.
pub const CG_FAIL_NONE: c_int = 0;
pub const CG_FAIL_MALFORMED: c_int = 1;
pub const CG_FAIL_RUNAWAY_PREFIX: c_int = 2;
pub const CG_FAIL_LENGTH_MISMATCH: c_int = 3;
pub const CG_FAIL_TRUNCATION_K_MINUS_1: c_int = 4;
pub const CG_FAIL_HALLUCINATED_ID: c_int = 5;
pub const CG_FAIL_DUPLICATE_ID: c_int = 6;
pub const CG_FAIL_MISSING_ID: c_int = 7;
pub const CG_FAIL_NON_NUMERIC_SCORE: c_int = 8;

/// Opaque flow configuration.
pub struct CgFlowConfig {
    inner: FlowConfig,
}

/// Opaque simulated trajectory.
pub struct CgTrajectory {
    inner: Trajectory,
}

/// Opaque strict-K list contract.
pub struct CgContract {
    inner: ListContract,
}

/// Opaque per-prompt trace set.
pub struct CgTraceSet {
    inner: TraceSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CgStatus {
    match e {
        Error::Domain(_) => CgStatus::Domain,
        Error::Config(_) | Error::Alignment(_) | Error::Coverage(_) => CgStatus::Config,
        Error::NoCrossing(_) => CgStatus::NoCrossing,
        Error::DigestMismatch { .. } => CgStatus::DigestMismatch,
        Error::Trace { .. } | Error::Json(_) | Error::Csv(_) => CgStatus::Parse,
        Error::Io { .. } => CgStatus::Other,
    }
}

struct Fail(CgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CgStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CgStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside cliffguard".into());
            CgStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CgStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn bad_code(what: &str, v: c_int) -> Fail {
    Fail(CgStatus::Config, format!("unknown {what} code {v}"))
}

/// Message for the last failing call on this thread, or "" if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Clip-safety threshold; writes `INFINITY` when no finite threshold exists.
///
/// # Safety
/// `out_value` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn cg_lam_star(p: f64, b: f64, c: f64, out_value: *mut f64) -> CgStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        *o = threshold::lam_star(&ClipRegime::new(p, b, c)?).value();
        Ok(())
    })
}

/// Clip boundary `q_c = 1 - (1-p)/c`.
///
/// # Safety
/// `out_value` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn cg_clip_boundary(p: f64, b: f64, c: f64, out_value: *mut f64) -> CgStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        *o = threshold::clip_boundary(&ClipRegime::new(p, b, c)?);
        Ok(())
    })
}

/// Sharpened fixed point at `lambda`.
///
/// # Safety
/// `out_value` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn cg_fixed_point(
    p: f64,
    b: f64,
    c: f64,
    lambda: f64,
    out_value: *mut f64,
) -> CgStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        *o = threshold::sharpened_fixed_point(&ClipRegime::new(p, b, c)?, lambda)?;
        Ok(())
    })
}

/// Threshold shifted by an entropy bonus of weight `gamma`.
///
/// # Safety
/// `out_value` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn cg_lam_star_entropy(
    p: f64,
    b: f64,
    c: f64,
    gamma: f64,
    out_value: *mut f64,
) -> CgStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        *o = threshold::lam_star_entropy(&ClipRegime::new(p, b, c)?, gamma)?;
        Ok(())
    })
}

/// Sensitivities of the threshold to `p` and to `logit(b)`.
///
/// # Safety
/// `out_dp` and `out_dlogitb` must be valid pointers to `double`.
#[no_mangle]
pub unsafe extern "C" fn cg_lam_star_sensitivity(
    p: f64,
    b: f64,
    c: f64,
    out_dp: *mut f64,
    out_dlogitb: *mut f64,
) -> CgStatus {
    guard(|| {
        let dp = out(out_dp, "out_dp")?;
        let db = out(out_dlogitb, "out_dlogitb")?;
        let r = ClipRegime::new(p, b, c)?;
        *dp = threshold::dlamstar_dp(&r)?;
        *db = threshold::dlamstar_dlogitb(&r)?;
        Ok(())
    })
}

/// New flow config with default step size, budget and `q0 = b`.
///
/// # Safety
/// `out_cfg` must be a valid pointer; on success it receives a handle owned
/// by the caller.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_new(
    p: f64,
    b: f64,
    c: f64,
    lambda: f64,
    out_cfg: *mut *mut CgFlowConfig,
) -> CgStatus {
    guard(|| {
        let o = out(out_cfg, "out_cfg")?;
        let inner = FlowConfig::new(ClipRegime::new(p, b, c)?, lambda);
        inner.validate()?;
        *o = Box::into_raw(Box::new(CgFlowConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`cg_flow_config_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_free(cfg: *mut CgFlowConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn edit_cfg(
    cfg: *mut CgFlowConfig,
    f: impl FnOnce(&mut FlowConfig) -> Result<(), Fail>,
) -> CgStatus {
    guard(|| {
        let h = out(cfg, "cfg")?;
        let mut next = h.inner;
        f(&mut next)?;
        next.validate()?;
        h.inner = next;
        Ok(())
    })
}

/// Step size. Invalid values leave the config unchanged.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_eta(cfg: *mut CgFlowConfig, eta: f64) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.eta = eta;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_steps(cfg: *mut CgFlowConfig, steps: u64) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.steps = steps;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_q0(cfg: *mut CgFlowConfig, q0: f64) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.q0 = q0;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_seed(cfg: *mut CgFlowConfig, seed: u64) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.seed = seed;
        Ok(())
    })
}

/// `CG_MODE_*`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_mode(cfg: *mut CgFlowConfig, mode: c_int) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.mode = match mode {
            CG_MODE_DETERMINISTIC => Mode::Deterministic,
            CG_MODE_STOCHASTIC => Mode::Stochastic,
            v => return Err(bad_code("mode", v)),
        };
        Ok(())
    })
}

/// `CG_RULE_*`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_update_rule(
    cfg: *mut CgFlowConfig,
    rule: c_int,
) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.update_rule = match rule {
            CG_RULE_BASE_RELATIVE => UpdateRule::BaseRelative,
            CG_RULE_NO_BASE => UpdateRule::NoBase,
            CG_RULE_ASPO_FLIP => UpdateRule::AspoFlip,
            v => return Err(bad_code("update rule", v)),
        };
        Ok(())
    })
}

/// `CG_ESTIMATOR_*`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_estimator(
    cfg: *mut CgFlowConfig,
    estimator: c_int,
) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.estimator = match estimator {
            CG_ESTIMATOR_SCORE_FUNCTION => Estimator::ScoreFunction,
            CG_ESTIMATOR_IS_WEIGHTED => Estimator::IsWeighted,
            v => return Err(bad_code("estimator", v)),
        };
        Ok(())
    })
}

/// KL-to-base regularizer; replaces any other regularizer.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_kl(cfg: *mut CgFlowConfig, beta: f64) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.regularizer = Regularizer::KlToBase { beta };
        Ok(())
    })
}

/// Entropy-bonus regularizer; replaces any other regularizer.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_entropy(
    cfg: *mut CgFlowConfig,
    gamma: f64,
) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.regularizer = Regularizer::EntropyBonus { gamma };
        Ok(())
    })
}

/// Linear lambda warmup; replaces any other regularizer.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_flow_config_set_warmup(
    cfg: *mut CgFlowConfig,
    warmup_steps: u64,
) -> CgStatus {
    edit_cfg(cfg, |c| {
        c.regularizer = Regularizer::LambdaWarmup { warmup_steps };
        Ok(())
    })
}

/// Run the configured flow.
///
/// # Safety
/// `cfg` must be a live handle and `out_traj` a valid pointer; on success it
/// receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn cg_simulate(
    cfg: *const CgFlowConfig,
    out_traj: *mut *mut CgTrajectory,
) -> CgStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let o = out(out_traj, "out_traj")?;
        let inner = simulate(&c.inner)?;
        *o = Box::into_raw(Box::new(CgTrajectory { inner }));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`cg_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_trajectory_free(traj: *mut CgTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded points (`steps + 1`), 0 for a null handle.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cg_trajectory_len(traj: *const CgTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.q_series.len())
}

/// Copy up to `cap` modal masses into `buf`; returns the number copied.
///
/// # Safety
/// `traj` must be a live handle and `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cg_trajectory_copy_q(
    traj: *const CgTrajectory,
    buf: *mut f64,
    cap: usize,
) -> usize {
    copy_series(traj, buf, cap, |t| &t.q_series)
}

/// Copy up to `cap` logits into `buf`; returns the number copied.
///
/// # Safety
/// `traj` must be a live handle and `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cg_trajectory_copy_theta(
    traj: *const CgTrajectory,
    buf: *mut f64,
    cap: usize,
) -> usize {
    copy_series(traj, buf, cap, |t| &t.theta_series)
}

unsafe fn copy_series(
    traj: *const CgTrajectory,
    buf: *mut f64,
    cap: usize,
    pick: impl Fn(&Trajectory) -> &Vec<f64>,
) -> usize {
    let Some(t) = traj.as_ref() else { return 0 };
    if buf.is_null() {
        return 0;
    }
    let s = pick(&t.inner);
    let n = s.len().min(cap);
    ptr::copy_nonoverlapping(s.as_ptr(), buf, n);
    n
}

/// Final modal mass, NaN for a null handle.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cg_trajectory_final_q(traj: *const CgTrajectory) -> f64 {
    traj.as_ref().map_or(f64::NAN, |t| t.inner.final_q())
}

/// Clip events over the run.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cg_trajectory_clip_events(traj: *const CgTrajectory) -> u64 {
    traj.as_ref().map_or(0, |t| t.inner.clip_event_count)
}

/// Returns 1 and writes the first-passage step when the run crossed the
/// clip boundary, 0 otherwise.
///
/// # Safety
/// `traj` must be a live handle or null; `out_step` may be null.
#[no_mangle]
pub unsafe extern "C" fn cg_trajectory_first_passage(
    traj: *const CgTrajectory,
    out_step: *mut u64,
) -> c_int {
    match traj.as_ref().and_then(|t| t.inner.first_passage_step) {
        Some(s) => {
            if let Some(o) = out_step.as_mut() {
                *o = s;
            }
            1
        }
        None => 0,
    }
}

/// Contract over `n_ids` expected ids. `id_key` may be null for `"review_id"`.
///
/// # Safety
/// `ids` must point to `n_ids` NUL-terminated UTF-8 strings; `out_contract`
/// must be valid and receives a caller-owned handle.
#[no_mangle]
pub unsafe extern "C" fn cg_contract_new(
    ids: *const *const c_char,
    n_ids: usize,
    id_key: *const c_char,
    out_contract: *mut *mut CgContract,
) -> CgStatus {
    guard(|| {
        let o = out(out_contract, "out_contract")?;
        let raw = slice_arg(ids, n_ids, "ids")?;
        let ids = raw
            .iter()
            .map(|&p| str_arg(p, "id").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let key = if id_key.is_null() {
            "review_id"
        } else {
            str_arg(id_key, "id_key")?
        };
        let inner = ListContract::new(ids, key)?;
        *o = Box::into_raw(Box::new(CgContract { inner }));
        Ok(())
    })
}

/// Require scores in `[lo, hi]`.
///
/// # Safety
/// `contract` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_contract_set_score_range(
    contract: *mut CgContract,
    lo: f64,
    hi: f64,
) -> CgStatus {
    guard(|| {
        let h = out(contract, "contract")?;
        h.inner = h.inner.clone().with_score_range(lo, hi)?;
        Ok(())
    })
}

/// # Safety
/// `contract` must come from [`cg_contract_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_contract_free(contract: *mut CgContract) {
    if !contract.is_null() {
        drop(Box::from_raw(contract));
    }
}

fn failure_code(m: Option<FailureMode>) -> c_int {
    match m {
        None => CG_FAIL_NONE,
        Some(FailureMode::Malformed) => CG_FAIL_MALFORMED,
        Some(FailureMode::RunawayPrefix) => CG_FAIL_RUNAWAY_PREFIX,
        Some(FailureMode::LengthMismatch) => CG_FAIL_LENGTH_MISMATCH,
        Some(FailureMode::TruncationKMinus1) => CG_FAIL_TRUNCATION_K_MINUS_1,
        Some(FailureMode::HallucinatedId) => CG_FAIL_HALLUCINATED_ID,
        Some(FailureMode::DuplicateId) => CG_FAIL_DUPLICATE_ID,
        Some(FailureMode::MissingId) => CG_FAIL_MISSING_ID,
        Some(FailureMode::NonNumericScore) => CG_FAIL_NON_NUMERIC_SCORE,
    }
}

/// Parse raw model text; writes a `CG_FAIL_*` code and the FMC flag.
///
/// # Safety
/// `contract` must be a live handle, `text` a NUL-terminated UTF-8 string,
/// `out_failure` valid; `out_fmc` may be null.
#[no_mangle]
pub unsafe extern "C" fn cg_parse_strict_k(
    contract: *const CgContract,
    text: *const c_char,
    out_failure: *mut c_int,
    out_fmc: *mut c_int,
) -> CgStatus {
    guard(|| {
        let c = contract.as_ref().ok_or_else(|| null("contract"))?;
        let t = str_arg(text, "text")?;
        let o = out(out_failure, "out_failure")?;
        let r = parse_strict_k(t, &c.inner);
        *o = failure_code(r.failure_mode);
        if let Some(f) = out_fmc.as_mut() {
            *f = r.fmc as c_int;
        }
        Ok(())
    })
}

/// Apply a threshold rule (`CG_MIDPOINT_*`, `CG_ONSET_*`, `CG_COLLAPSE_*`)
/// to `n` sorted `(lambda, value)` points. Returns `NoCrossing` when the
/// rule is never satisfied.
///
/// # Safety
/// `lambdas` and `values` must each hold `n` doubles; `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cg_threshold_rule(
    lambdas: *const f64,
    values: *const f64,
    n: usize,
    kind: c_int,
    level: f64,
    out_value: *mut f64,
) -> CgStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let l = slice_arg(lambdas, n, "lambdas")?;
        let v = slice_arg(values, n, "values")?;
        let kind = match kind {
            CG_MIDPOINT_FRACTION_OF_PEAK => RuleKind::MidpointFractionOfPeak,
            CG_MIDPOINT_FIXED_THRESHOLD => RuleKind::MidpointFixedThreshold,
            CG_ONSET_LAST_ABOVE => RuleKind::OnsetLastAbove,
            CG_COLLAPSE_FIRST_BELOW => RuleKind::CollapseFirstBelow,
            k => return Err(bad_code("rule kind", k)),
        };
        let curve: Vec<(f64, f64)> = l.iter().copied().zip(v.iter().copied()).collect();
        match ThresholdRule::new(kind, level)?.apply(&curve)? {
            Some(x) => {
                *o = x;
                Ok(())
            }
            None => Err(Fail(
                CgStatus::NoCrossing,
                "rule not satisfied on this curve".into(),
            )),
        }
    })
}

/// Parse a trace set from JSONL text.
///
/// # Safety
/// `jsonl` must be a NUL-terminated UTF-8 string; `out_traces` must be valid
/// and receives a caller-owned handle.
#[no_mangle]
pub unsafe extern "C" fn cg_trace_set_from_jsonl(
    jsonl: *const c_char,
    out_traces: *mut *mut CgTraceSet,
) -> CgStatus {
    guard(|| {
        let o = out(out_traces, "out_traces")?;
        let inner = TraceSet::from_jsonl_str(str_arg(jsonl, "jsonl")?, "<ffi>")?;
        *o = Box::into_raw(Box::new(CgTraceSet { inner }));
        Ok(())
    })
}

/// # Safety
/// `traces` must come from [`cg_trace_set_from_jsonl`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_trace_set_free(traces: *mut CgTraceSet) {
    if !traces.is_null() {
        drop(Box::from_raw(traces));
    }
}

/// Aggregate (`CG_AGG_*`) over positions with modal mass `>= tau`.
///
/// # Safety
/// `traces` must be a live handle and `out_value` valid.
#[no_mangle]
pub unsafe extern "C" fn cg_trace_set_aggregate(
    traces: *const CgTraceSet,
    kind: c_int,
    tau: f64,
    out_value: *mut f64,
) -> CgStatus {
    guard(|| {
        let t = traces.as_ref().ok_or_else(|| null("traces"))?;
        let o = out(out_value, "out_value")?;
        let kind = match kind {
            CG_AGG_MEAN => AggregatorKind::Mean,
            CG_AGG_GEOMETRIC_MEAN => AggregatorKind::GeometricMean,
            CG_AGG_MIN => AggregatorKind::Min,
            CG_AGG_P5 => AggregatorKind::P5,
            CG_AGG_MAX_OF_PROMPT_MEANS => AggregatorKind::MaxOfPromptMeans,
            CG_AGG_MAX => AggregatorKind::Max,
            k => return Err(bad_code("aggregator", k)),
        };
        *o = aggregate(&t.inner, &AggregatorSpec::new(kind, tau)?)?;
        Ok(())
    })
}
