//! Closed-form clip-safety threshold for sharpened reverse-KL distillation.
//!
//! A regime is the triple (teacher modal mass `p`, warmstart modal mass `b`,
//! clip ratio `c`). The student tracks the logit-space fixed point
//! `logit q* = lambda*logit p + (1-lambda)*logit b`; an update clips once
//! `q*` reaches `q_c = 1 - (1-p)/c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{clamp_prob, logit, sigmoid};

/// Default logit-space tolerance used to detect `b == p`.
pub const DEFAULT_EQ_TOL: f64 = 1e-12;

/// Step in logit(b) used by [`dlamstar_dlogitb`].
pub const LOGIT_B_STEP: f64 = 1e-5;

/// Validated `(p, b, c)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegime", into = "RawRegime")]
pub struct ClipRegime {
    p: f64,
    b: f64,
    c: f64,
    clamped: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegime {
    p: f64,
    b: f64,
    c: f64,
}

impl TryFrom<RawRegime> for ClipRegime {
    type Error = Error;
    fn try_from(r: RawRegime) -> Result<Self> {
        ClipRegime::new(r.p, r.b, r.c)
    }
}

impl From<ClipRegime> for RawRegime {
    fn from(r: ClipRegime) -> Self {
        RawRegime {
            p: r.p,
            b: r.b,
            c: r.c,
        }
    }
}

impl ClipRegime {
    /// Requires `1/2 < p < 1`, `0 < b < 1`, `c > 1`. Values within 1e-15 of
    /// 0 or 1 are clamped and the regime is flagged.
    pub fn new(p: f64, b: f64, c: f64) -> Result<Self> {
        if !(p.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::domain("p, b, c must be finite"));
        }
        if !(p > 0.5 && p < 1.0) {
            return Err(Error::domain(format!("p must lie in (1/2, 1), got {p}")));
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::domain(format!("b must lie in (0, 1), got {b}")));
        }
        if !(c > 1.0) {
            return Err(Error::domain(format!("c must exceed 1, got {c}")));
        }
        let pc = clamp_prob(p);
        let bc = clamp_prob(b);
        Ok(ClipRegime {
            p: pc.value,
            b: bc.value,
            c,
            clamped: pc.clamped || bc.clamped,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    /// True when `p` or `b` had to be clamped away from 0 or 1.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    /// Same regime with a different warmstart mass.
    pub fn with_b(&self, b: f64) -> Result<Self> {
        ClipRegime::new(self.p, b, self.c)
    }
}

/// Either a finite threshold or `+inf` (the `b == p` case).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(f64);

impl Threshold {
    pub const INFINITE: Threshold = Threshold(f64::INFINITY);

    pub fn finite(v: f64) -> Self {
        Threshold(v)
    }
    pub fn value(&self) -> f64 {
        self.0
    }
    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Threshold(v)),
            Repr::Str(s) if s == "inf" => Ok(Threshold::INFINITE),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad threshold {s:?}"))),
        }
    }
}

/// `q_c = 1 - (1-p)/c`.
pub fn clip_boundary(regime: &ClipRegime) -> f64 {
    1.0 - (1.0 - regime.p) / regime.c
}

/// `logit(q_c) = log((c-1+p)/(1-p))`, computed without forming `q_c`.
pub fn logit_clip_boundary(regime: &ClipRegime) -> f64 {
    ((regime.c - 1.0 + regime.p) / (1.0 - regime.p)).ln()
}

/// Result of [`fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub q_star: f64,
    pub logit_q_star: f64,
    pub q_c: f64,
    /// True when `q_star` had to be clamped to stay inside (0, 1).
    pub clamped: bool,
}

/// Sharpened fixed point together with the boundary and clamp flag.
pub fn fixed_point(regime: &ClipRegime, lambda: f64) -> Result<FixedPoint> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::domain(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let t = lambda * logit(regime.p) + (1.0 - lambda) * logit(regime.b);
    let q = clamp_prob(sigmoid(t));
    Ok(FixedPoint {
        q_star: q.value,
        logit_q_star: t,
        q_c: clip_boundary(regime),
        clamped: q.clamped,
    })
}

/// `p_lambda^(b)`: the modal mass the student converges to at sharpening `lambda`.
pub fn sharpened_fixed_point(regime: &ClipRegime, lambda: f64) -> Result<f64> {
    fixed_point(regime, lambda).map(|f| f.q_star)
}

/// Clip-safety threshold using the default `b == p` tolerance.
pub fn lam_star(regime: &ClipRegime) -> Threshold {
    lam_star_with_tol(regime, DEFAULT_EQ_TOL)
}

/// `lambda* = (logit q_c - logit b) / (logit p - logit b)`, or `+inf` when
/// `|logit p - logit b| <= tol`.
///
/// For `b < p` the safe set is `lambda < lambda*`. For `b > p` the
/// inequality flips (see [`is_clip_safe`]).
pub fn lam_star_with_tol(regime: &ClipRegime, tol: f64) -> Threshold {
    let lp = logit(regime.p);
    let lb = logit(regime.b);
    let denom = lp - lb;
    if denom.abs() <= tol {
        return Threshold::INFINITE;
    }
    Threshold((logit_clip_boundary(regime) - lb) / denom)
}

/// True iff the sharpened fixed point stays strictly below `q_c`.
///
/// Decided through the threshold: `lambda < lambda*` when `b < p`,
/// `lambda > lambda*` when `b > p`, always when `b == p`.
pub fn is_clip_safe(regime: &ClipRegime, lambda: f64) -> bool {
    let lp = logit(regime.p);
    let lb = logit(regime.b);
    let t = lam_star(regime);
    if t.is_infinite() {
        return true;
    }
    if lp > lb {
        lambda < t.value()
    } else {
        lambda > t.value()
    }
}

fn require_base_below(regime: &ClipRegime) -> Result<()> {
    if regime.b >= regime.p {
        return Err(Error::domain(format!(
            "requires b < p, got b={} p={}",
            regime.b, regime.p
        )));
    }
    Ok(())
}

/// Analytic `d lambda*/dp` at fixed `b`, `c`. Requires `b < p`.
pub fn dlamstar_dp(regime: &ClipRegime) -> Result<f64> {
    require_base_below(regime)?;
    let (p, b, c) = (regime.p, regime.b, regime.c);
    let a = ((1.0 - p) / (c - 1.0 + p)).ln();
    let bb = ((1.0 - p) / p).ln();
    let k = ((1.0 - b) / b).ln();
    let da = -c / ((1.0 - p) * (c - 1.0 + p));
    let db = -1.0 / (p * (1.0 - p));
    let den = bb - k;
    Ok((da * den - (a - k) * db) / (den * den))
}

/// `d lambda*/d logit(b)` by a central difference of width [`LOGIT_B_STEP`].
pub fn dlamstar_dlogitb(regime: &ClipRegime) -> Result<f64> {
    require_base_below(regime)?;
    let lb = logit(regime.b);
    let h = LOGIT_B_STEP;
    let hi = regime.with_b(sigmoid(lb + h))?;
    let lo = regime.with_b(sigmoid(lb - h))?;
    let (th, tl) = (lam_star(&hi), lam_star(&lo));
    if th.is_infinite() || tl.is_infinite() {
        return Err(Error::domain("difference stencil touches b == p"));
    }
    Ok((th.value() - tl.value()) / (2.0 * h))
}

/// Threshold under an entropy bonus of weight `gamma`, linearised around
/// the unregularised boundary. Requires `b != p`.
pub fn lam_star_entropy(regime: &ClipRegime, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    let base = lam_star(regime);
    if base.is_infinite() {
        return Err(Error::domain("entropy shift undefined when b == p"));
    }
    let qc = clip_boundary(regime);
    let lqc = logit_clip_boundary(regime);
    let denom = logit(regime.p) - logit(regime.b);
    Ok(base.value() + gamma * qc * (1.0 - qc) * lqc / denom)
}

/// Bracket endpoints `(lambda*_safe, lambda*_typ)` from a pessimistic and a
/// typical teacher modal mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub safe: Threshold,
    pub typ: Threshold,
}

pub fn lam_star_bracket(p_typ: f64, p_safe: f64, b: f64, c: f64) -> Result<Bracket> {
    if p_safe < p_typ {
        return Err(Error::domain(format!(
            "p_safe ({p_safe}) must be >= p_typ ({p_typ})"
        )));
    }
    let typ = lam_star(&ClipRegime::new(p_typ, b, c)?);
    let safe = lam_star(&ClipRegime::new(p_safe, b, c)?);
    Ok(Bracket { safe, typ })
}
