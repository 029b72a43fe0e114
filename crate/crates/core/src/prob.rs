//! Scalar probability helpers shared across modules.

/// Probabilities closer than this to 0 or 1 are clamped before entering log space.
pub const PROB_CLAMP: f64 = 1e-15;

/// A probability after clamping, with a flag recording whether clamping happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    pub value: f64,
    pub clamped: bool,
}

/// Clamp `x` into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub fn clamp_prob(x: f64) -> Clamped {
    let lo = PROB_CLAMP;
    let hi = 1.0 - PROB_CLAMP;
    if x < lo {
        Clamped {
            value: lo,
            clamped: true,
        }
    } else if x > hi {
        Clamped {
            value: hi,
            clamped: true,
        }
    } else {
        Clamped {
            value: x,
            clamped: false,
        }
    }
}

pub fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `ln sigmoid(t)`.
pub fn log_sigmoid(t: f64) -> f64 {
    -softplus(-t)
}

/// Type-7 (linear interpolation) quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let j = h.floor() as usize;
    if j + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - j as f64;
    // lo + frac*(hi-lo) never drops below lo when hi >= lo.
    sorted[j] + frac * (sorted[j + 1] - sorted[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_sigmoid_roundtrip() {
        for &x in &[1e-9, 0.1, 0.5, 0.81, 0.9993, 1.0 - 1e-9] {
            assert!((sigmoid(logit(x)) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn log_sigmoid_is_stable_at_extremes() {
        assert_eq!(log_sigmoid(800.0), 0.0);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
    }

    #[test]
    fn clamping_is_flagged() {
        assert!(clamp_prob(0.0).clamped);
        assert!(clamp_prob(1.0).clamped);
        assert!(!clamp_prob(0.5).clamped);
        assert_eq!(clamp_prob(1.0).value, 1.0 - PROB_CLAMP);
    }

    #[test]
    fn type7_quantile_matches_hand_values() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert!((quantile_sorted(&v, 0.05) - 1.2).abs() < 1e-12);
        assert!((quantile_sorted(&v, 0.5) - 3.0).abs() < 1e-12);
    }
}
