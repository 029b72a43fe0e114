use std::ffi::{CStr, CString};
use std::ptr;

use cliffguard_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cg_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn scalar_threshold_matches_core() {
    let mut v = 0.0;
    assert_eq!(unsafe { cg_lam_star(0.9, 0.5, 5.0, &mut v) }, CgStatus::Ok);
    let r = cliffguard::threshold::ClipRegime::new(0.9, 0.5, 5.0).unwrap();
    assert_eq!(v, cliffguard::threshold::lam_star(&r).value());

    assert_eq!(unsafe { cg_lam_star(0.9, 0.9, 5.0, &mut v) }, CgStatus::Ok);
    assert!(v.is_infinite());

    let mut q = 0.0;
    assert_eq!(
        unsafe { cg_clip_boundary(0.9, 0.5, 5.0, &mut q) },
        CgStatus::Ok
    );
    assert!((q - 0.98).abs() < 1e-15);
}

#[test]
fn domain_errors_set_message() {
    let mut v = 0.0;
    assert_eq!(
        unsafe { cg_lam_star(0.9, 0.5, 0.5, &mut v) },
        CgStatus::Domain
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { cg_lam_star(0.9, 0.5, 5.0, ptr::null_mut()) },
        CgStatus::NullPointer
    );
    assert!(last_error().contains("null"));
}

#[test]
fn entropy_and_sensitivity() {
    let (mut l0, mut l1) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            cg_lam_star_entropy(0.9, 0.5, 5.0, 0.0, &mut l0),
            CgStatus::Ok
        );
        assert_eq!(
            cg_lam_star_entropy(0.9, 0.5, 5.0, 0.1, &mut l1),
            CgStatus::Ok
        );
    }
    assert_ne!(l0, l1);
    let (mut dp, mut db) = (0.0, 0.0);
    assert_eq!(
        unsafe { cg_lam_star_sensitivity(0.9, 0.5, 5.0, &mut dp, &mut db) },
        CgStatus::Ok
    );
    assert!(dp < 0.0);
}

#[test]
fn flow_handle_round_trip() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(
            cg_flow_config_new(0.9, 0.5, 5.0, 1.2, &mut cfg),
            CgStatus::Ok
        );
        assert_eq!(cg_flow_config_set_steps(cfg, 200_000), CgStatus::Ok);
        assert_eq!(cg_flow_config_set_eta(cfg, 1e-2), CgStatus::Ok);
        assert_eq!(cg_flow_config_set_eta(cfg, -1.0), CgStatus::Config);
        assert_eq!(cg_flow_config_set_mode(cfg, 7), CgStatus::Config);
        let mut traj = ptr::null_mut();
        assert_eq!(cg_simulate(cfg, &mut traj), CgStatus::Ok);
        let n = cg_trajectory_len(traj);
        assert_eq!(n, 200_001);
        let mut buf = vec![0.0; n];
        assert_eq!(cg_trajectory_copy_q(traj, buf.as_mut_ptr(), n), n);
        let mut fp = 0.0;
        cg_fixed_point(0.9, 0.5, 5.0, 1.2, &mut fp);
        assert!((buf[n - 1] - fp).abs() < 1e-8);
        assert_eq!(cg_trajectory_final_q(traj), buf[n - 1]);
        assert_eq!(cg_trajectory_first_passage(traj, ptr::null_mut()), 0);
        cg_trajectory_free(traj);

        assert_eq!(
            cg_flow_config_set_mode(cfg, CG_MODE_STOCHASTIC),
            CgStatus::Ok
        );
        assert_eq!(cg_flow_config_set_seed(cfg, 3), CgStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        cg_simulate(cfg, &mut a);
        cg_simulate(cfg, &mut b);
        assert_eq!(cg_trajectory_final_q(a), cg_trajectory_final_q(b));
        cg_trajectory_free(a);
        cg_trajectory_free(b);
        cg_flow_config_free(cfg);
        cg_flow_config_free(ptr::null_mut());
    }
}

#[test]
fn contract_handle_classifies() {
    let ids: Vec<CString> = ["a", "b", "c"]
        .iter()
        .map(|s| CString::new(*s).unwrap())
        .collect();
    let ptrs: Vec<_> = ids.iter().map(|c| c.as_ptr()).collect();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(
            cg_contract_new(ptrs.as_ptr(), ptrs.len(), ptr::null(), &mut h),
            CgStatus::Ok
        );
        let case = |text: &str| {
            let t = CString::new(text).unwrap();
            let (mut f, mut fmc) = (-1, -1);
            assert_eq!(
                cg_parse_strict_k(h, t.as_ptr(), &mut f, &mut fmc),
                CgStatus::Ok
            );
            (f, fmc)
        };
        let ok = r#"[{"review_id":"a","score":1},{"review_id":"b","score":2},{"review_id":"c","score":3}]"#;
        assert_eq!(case(ok), (CG_FAIL_NONE, 0));
        let short = r#"[{"review_id":"a","score":1},{"review_id":"b","score":2}]"#;
        assert_eq!(case(short), (CG_FAIL_TRUNCATION_K_MINUS_1, 1));
        assert_eq!(case("no list here").0, CG_FAIL_MALFORMED);
        assert_eq!(case("[{\"review_id\":\"a\"").0, CG_FAIL_RUNAWAY_PREFIX);
        cg_contract_free(h);
    }
}

#[test]
fn threshold_rule_midpoint() {
    let l = [1.00, 1.05, 1.10];
    let v = [0.934, 0.703, 0.500];
    let mut m = 0.0;
    let s = unsafe {
        cg_threshold_rule(
            l.as_ptr(),
            v.as_ptr(),
            3,
            CG_MIDPOINT_FIXED_THRESHOLD,
            0.6,
            &mut m,
        )
    };
    assert_eq!(s, CgStatus::Ok);
    assert!(m > 1.05 && m < 1.10);
    let flat = [0.9, 0.9, 0.9];
    let s = unsafe {
        cg_threshold_rule(
            l.as_ptr(),
            flat.as_ptr(),
            3,
            CG_MIDPOINT_FIXED_THRESHOLD,
            0.5,
            &mut m,
        )
    };
    assert_eq!(s, CgStatus::NoCrossing);
}

#[test]
fn trace_set_aggregates() {
    let text = CString::new("{\"prompt_id\":\"x\",\"modal_probs\":[0.95,0.99,0.5]}\n").unwrap();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(cg_trace_set_from_jsonl(text.as_ptr(), &mut t), CgStatus::Ok);
        let mut v = 0.0;
        assert_eq!(
            cg_trace_set_aggregate(t, CG_AGG_MEAN, 0.9, &mut v),
            CgStatus::Ok
        );
        assert!((v - 0.97).abs() < 1e-15);
        assert_eq!(cg_trace_set_aggregate(t, 99, 0.9, &mut v), CgStatus::Config);
        cg_trace_set_free(t);
        let bad = CString::new("{not json").unwrap();
        assert_eq!(
            cg_trace_set_from_jsonl(bad.as_ptr(), &mut t),
            CgStatus::Parse
        );
    }
}

#[test]
fn header_is_generated_and_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/cliffguard.h");
    let text = std::fs::read_to_string(header).expect("header written by build script");
    for sym in [
        "cg_lam_star",
        "cg_simulate",
        "cg_parse_strict_k",
        "typedef struct CgFlowConfig CgFlowConfig",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let dir = tempfile_dir();
    let src = dir.join("probe.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ double v; return (int)cg_lam_star(0.9, 0.5, 5.0, &v); }}\n")).unwrap();
    match std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror"])
        .arg(&src)
        .status()
    {
        Ok(s) => assert!(s.success(), "header does not compile as C"),
        Err(_) => eprintln!("no C compiler found; skipped compile check"),
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("cliffguard-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
