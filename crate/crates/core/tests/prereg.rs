use proptest::prelude::*;

use cliffguard::prereg::*;
use cliffguard::Error;

const SWEEP: [(f64, f64); 9] = [
    (0.50, 0.816),
    (1.00, 0.887),
    (1.05, 0.939),
    (1.10, 0.943),
    (1.15, 0.948),
    (1.20, 0.868),
    (1.25, 0.651),
    (1.40, 0.160),
    (1.50, 0.085),
];

const FINE_GRID: [f64; 4] = [1.18, 1.20, 1.22, 1.24];
const PER_SEED: [(u64, [f64; 4], Option<f64>); 5] = [
    (7, [0.901, 0.830, 0.731, 0.679], Some(1.18)),
    (13, [0.934, 0.797, 0.873, 0.486], Some(1.18)),
    (21, [0.863, 0.802, 0.901, 0.561], Some(1.22)),
    (42, [0.934, 0.934, 0.651, 0.684], Some(1.20)),
    (95, [0.858, 0.689, 0.788, 0.877], None),
];

fn rule(kind: RuleKind, level: f64) -> ThresholdRule {
    ThresholdRule::new(kind, level).unwrap()
}

#[test]
fn onset_and_collapse_on_sweep_table() {
    assert_eq!(
        rule(RuleKind::OnsetLastAbove, 0.9).apply(&SWEEP).unwrap(),
        Some(1.15)
    );
    assert_eq!(
        rule(RuleKind::CollapseFirstBelow, 0.7)
            .apply(&SWEEP)
            .unwrap(),
        Some(1.25)
    );
}

#[test]
fn per_seed_onsets() {
    for (seed, vals, want) in PER_SEED {
        let curve: Vec<(f64, f64)> = FINE_GRID.iter().copied().zip(vals).collect();
        assert_eq!(
            rule(RuleKind::OnsetLastAbove, 0.9).apply(&curve).unwrap(),
            want,
            "seed {seed}"
        );
    }
}

#[test]
fn onset_can_follow_collapse_on_a_dip() {
    let c = [(1.0, 0.95), (1.1, 0.5), (1.2, 0.95)];
    assert_eq!(
        rule(RuleKind::OnsetLastAbove, 0.9).apply(&c).unwrap(),
        Some(1.2)
    );
    assert_eq!(
        rule(RuleKind::CollapseFirstBelow, 0.7).apply(&c).unwrap(),
        Some(1.1)
    );
}

#[test]
fn onset_constant_curve_is_last_point() {
    let c = [(1.0, 1.0), (1.1, 1.0), (1.2, 1.0)];
    assert_eq!(
        rule(RuleKind::OnsetLastAbove, 0.9).apply(&c).unwrap(),
        Some(1.2)
    );
    assert_eq!(
        rule(RuleKind::CollapseFirstBelow, 0.7).apply(&c).unwrap(),
        None
    );
}

#[test]
fn midpoint_examples() {
    let frac = rule(RuleKind::MidpointFractionOfPeak, 0.7);
    let e2 = [(1.00, 0.934), (1.05, 0.703), (1.10, 0.500)];
    let m = frac.apply(&e2).unwrap().unwrap();
    assert!((m - 1.061).abs() <= 0.015, "{m}");
    let e3 = [(1.05, 0.939), (1.075, 0.632)];
    let m = frac.apply(&e3).unwrap().unwrap();
    assert!((m - 1.069).abs() <= 0.015, "{m}");

    let fixed = rule(RuleKind::MidpointFixedThreshold, 0.5);
    let exact = [(1.0, 0.9), (1.1, 0.5), (1.2, 0.1)];
    assert_eq!(fixed.apply(&exact).unwrap(), Some(1.1));
    assert_eq!(fixed.apply(&[(1.0, 0.9), (1.1, 0.8)]).unwrap(), None);
}

#[test]
fn first_descending_crossing_wins() {
    // Dip then recovery then the real cliff: the first crossing is reported.
    let c = [(1.0, 0.9), (1.1, 0.4), (1.2, 0.9), (1.3, 0.1)];
    let m = rule(RuleKind::MidpointFixedThreshold, 0.5)
        .apply(&c)
        .unwrap()
        .unwrap();
    assert!((m - 1.08).abs() < 1e-12);
}

#[test]
fn rule_and_curve_validation() {
    assert!(ThresholdRule::new(RuleKind::MidpointFractionOfPeak, 0.0).is_err());
    assert!(ThresholdRule::new(RuleKind::MidpointFractionOfPeak, 1.2).is_err());
    assert!(ThresholdRule::new(RuleKind::OnsetLastAbove, f64::NAN).is_err());
    let r = rule(RuleKind::OnsetLastAbove, 0.9);
    assert!(r.apply(&[]).is_err());
    assert!(r.apply(&[(1.1, 0.5), (1.0, 0.4)]).is_err());
}

fn window(crit: Vec<Criterion>) -> WindowSpec {
    WindowSpec {
        name: "w".into(),
        statistic: "parse".into(),
        lo: 1.00,
        hi: 1.10,
        grid: vec![0.95, 1.00, 1.05, 1.10, 1.20],
        convention: ThresholdRule::default(),
        criteria: crit,
        predicted_crossing: true,
    }
}

fn anchor(l: f64, cmp: Comparator, t: f64) -> Criterion {
    Criterion {
        role: CriterionRole::Anchor,
        statistic: "parse".into(),
        lambda: Some(l),
        comparator: cmp,
        threshold: t,
    }
}

fn floor(t: f64) -> Criterion {
    Criterion {
        role: CriterionRole::Precondition,
        statistic: "base".into(),
        lambda: None,
        comparator: Comparator::Ge,
        threshold: t,
    }
}

fn observed(vals: [f64; 5], base: f64) -> ObservedSweep {
    let grid = [0.95, 1.00, 1.05, 1.10, 1.20];
    let pairs: Vec<(f64, f64)> = grid.iter().copied().zip(vals).collect();
    let mut o = ObservedSweep::from_pairs("parse", &pairs);
    o.baselines.insert("base".into(), base);
    o
}

#[test]
fn verdict_rule_table() {
    let cliff = [0.95, 0.94, 0.60, 0.30, 0.20];
    let flat = [0.95; 5];
    let late = [0.95, 0.95, 0.95, 0.94, 0.10];
    let w = lock(window(vec![
        floor(0.5),
        anchor(0.95, Comparator::Ge, 0.9),
        anchor(1.20, Comparator::Le, 0.25),
    ]))
    .unwrap();
    let v = |vals, base| evaluate_verdict(&w, &observed(vals, base)).unwrap().verdict;
    assert_eq!(v(cliff, 0.9), Verdict::Pass);
    assert_eq!(v([0.95, 0.94, 0.60, 0.30, 0.40], 0.9), Verdict::Partial);
    assert_eq!(v(late, 0.9), Verdict::Fail);
    assert_eq!(v(flat, 0.9), Verdict::Fail);
    assert_eq!(v(flat, 0.1), Verdict::Abstain);
    assert_eq!(v(cliff, 0.1), Verdict::Abstain);

    let mut none = window(vec![]);
    none.predicted_crossing = false;
    let w = lock(none).unwrap();
    assert_eq!(
        evaluate_verdict(&w, &observed(flat, 0.9)).unwrap().verdict,
        Verdict::Pass
    );
    assert_eq!(
        evaluate_verdict(&w, &observed(cliff, 0.9)).unwrap().verdict,
        Verdict::Fail
    );

    assert_eq!(Verdict::Pass.exit_code(), 0);
    let codes: std::collections::HashSet<i32> = [Verdict::Fail, Verdict::Partial, Verdict::Abstain]
        .iter()
        .map(|v| v.exit_code())
        .collect();
    assert_eq!(codes.len(), 3);
    assert!(!codes.contains(&0));
}

#[test]
fn coverage_and_lock_errors() {
    let w = lock(window(vec![anchor(0.90, Comparator::Ge, 0.9)])).unwrap();
    assert!(matches!(
        evaluate_verdict(&w, &observed([0.9; 5], 1.0)),
        Err(Error::Coverage(_))
    ));
    let partial = ObservedSweep::from_pairs("parse", &[(0.95, 1.0), (1.00, 1.0)]);
    assert!(matches!(
        evaluate_verdict(&lock(window(vec![])).unwrap(), &partial),
        Err(Error::Coverage(_))
    ));

    let mut bad = window(vec![]);
    bad.grid = vec![1.1, 1.0];
    assert!(matches!(lock(bad), Err(Error::Config(_))));
    let mut bad = window(vec![]);
    bad.lo = 1.2;
    assert!(lock(bad).is_err());
    let mut bad = window(vec![]);
    bad.criteria = vec![Criterion {
        lambda: None,
        ..anchor(1.0, Comparator::Ge, 0.5)
    }];
    assert!(lock(bad).is_err());
}

#[test]
fn locked_window_json_round_trip() {
    let w = lock(window(vec![floor(0.3), anchor(1.2, Comparator::Lt, 0.5)])).unwrap();
    let s = serde_json::to_string_pretty(&w).unwrap();
    let back: LockedWindow = serde_json::from_str(&s).unwrap();
    assert_eq!(back, w);
    back.verify().unwrap();
    let tampered = s.replace("\"hi\": 1.1", "\"hi\": 1.2");
    assert_ne!(tampered, s);
    let t: LockedWindow = serde_json::from_str(&tampered).unwrap();
    assert!(matches!(t.verify(), Err(Error::DigestMismatch { .. })));
}

#[test]
fn fashion_window_fields() {
    let w = lock(WindowSpec {
        name: "fashion_n200".into(),
        statistic: "parse".into(),
        lo: 1.00,
        hi: 1.10,
        grid: vec![1.00, 1.05, 1.10],
        convention: ThresholdRule::default(),
        criteria: vec![],
        predicted_crossing: true,
    })
    .unwrap();
    assert_eq!((w.spec.lo, w.spec.hi), (1.00, 1.10));
    assert_eq!(w.spec.grid, vec![1.00, 1.05, 1.10]);
    assert_eq!(w.lock_digest.len(), 64);
}

fn curve_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(0.0f64..1.0, 2..12).prop_map(|vs| {
        vs.into_iter()
            .enumerate()
            .map(|(i, v)| (1.0 + 0.05 * i as f64, v))
            .collect()
    })
}

fn mutate(w: &LockedWindow, which: usize, delta: f64) -> LockedWindow {
    let mut m = w.clone();
    let s = &mut m.spec;
    match which % 10 {
        0 => s.lo -= delta,
        1 => s.hi += delta,
        2 => s.name.push('_'),
        3 => s.statistic.push('_'),
        4 => s.grid[0] -= delta,
        5 => s.convention.level = (s.convention.level * 0.5).max(1e-3),
        6 => s.predicted_crossing = !s.predicted_crossing,
        7 => s.criteria[0].threshold += delta,
        8 => s.criteria[0].comparator = Comparator::Gt,
        _ => s.convention.kind = RuleKind::MidpointFixedThreshold,
    }
    m
}

proptest! {
    #[test]
    fn verdict_is_pure(vals in prop::array::uniform5(0.0f64..1.0), base in 0.0f64..1.0) {
        let w = lock(window(vec![floor(0.5), anchor(0.95, Comparator::Ge, 0.9)])).unwrap();
        let o = observed(vals, base);
        let a = evaluate_verdict(&w, &o).unwrap();
        let b = evaluate_verdict(&w.clone(), &o.clone()).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn midpoint_stable_under_extra_points_outside_crossing(c in curve_strategy(), extra in 0.0f64..1.0) {
        let r = rule(RuleKind::MidpointFixedThreshold, 0.5);
        if let Some(m) = r.apply(&c).unwrap() {
            // A leading point below the threshold and a trailing point cannot
            // form an earlier descending pair.
            let mut c2 = vec![(c[0].0 - 0.05, 0.499 * extra)];
            c2.extend_from_slice(&c);
            c2.push((c.last().unwrap().0 + 0.05, extra));
            let m2 = r.apply(&c2).unwrap().unwrap();
            prop_assert!((m - m2).abs() < 1e-12, "{} vs {}", m, m2);
        }
    }

    #[test]
    fn onset_not_after_collapse_on_monotone_curves(c in curve_strategy(), hi in 0.5f64..1.0, gap in 1e-6f64..0.5) {
        // Sorting gives a non-increasing curve; non-monotone sweeps can dip
        // below collapse and recover above onset later.
        let mut vals: Vec<f64> = c.iter().map(|p| p.1).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let c: Vec<(f64, f64)> = c.iter().map(|p| p.0).zip(vals).collect();
        let on = rule(RuleKind::OnsetLastAbove, hi).apply(&c).unwrap();
        let co = rule(RuleKind::CollapseFirstBelow, hi - gap).apply(&c).unwrap();
        if let (Some(on), Some(co)) = (on, co) {
            prop_assert!(on <= co, "onset {} after collapse {}", on, co);
        }
    }

    #[test]
    fn any_single_mutation_is_rejected(which in 0usize..10, delta in 1e-9f64..1.0) {
        let w = lock(window(vec![anchor(0.95, Comparator::Ge, 0.9)])).unwrap();
        let m = mutate(&w, which, delta);
        prop_assume!(m != w);
        let o = observed([0.95, 0.94, 0.60, 0.30, 0.20], 1.0);
        let mismatch = matches!(evaluate_verdict(&m, &o), Err(Error::DigestMismatch { .. }));
        prop_assert!(mismatch);
        prop_assert!(m.verify().is_err());
    }
}
