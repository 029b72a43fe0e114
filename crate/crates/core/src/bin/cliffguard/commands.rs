use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use cliffguard::calibration::{
    aggregate_all, b_sensitivity, bootstrap_ci, class_spread, predict_bracket, subsample_variance,
    Aggregates, AggregatorKind, AggregatorSpec, BSensitivityRow, BracketRequest, Ci,
    ClassSpreadTable, PredictionBracket, SubsampleRow, TraceSet,
};
use cliffguard::contract::{evaluate_corpus, read_corpus_jsonl, ContractTemplate, MetricsRecord};
use cliffguard::flow::{
    empirical_cliff_midpoint, first_passage_curve, simulate, sweep_lambda, DriftReport, FlowConfig,
    LambdaSummary, Mode, Monitored,
};
use cliffguard::manifest::{fmt_f64, InputRef, RunManifest};
use cliffguard::prereg::window::ObservedRow;
use cliffguard::prereg::{
    evaluate_verdict, lock, LockedWindow, ObservedSweep, VerdictReport, WindowSpec,
};
use cliffguard::threshold::{
    clip_boundary, dlamstar_dlogitb, dlamstar_dp, fixed_point, is_clip_safe, lam_star_entropy,
    lam_star_with_tol, logit_clip_boundary, ClipRegime, Threshold,
};
use cliffguard::{Error, Result};

use crate::config::{
    self, parse_f64_list, parse_u64_list, read_json, resolve_flow, resolve_grid, resolve_seed,
    GridPlan,
};
use crate::output::{emit, write_csv, write_file};
use crate::{
    CalibrateArgs, Command, DriftArgs, EvalArgs, FixedPointArgs, LamstarArgs, PreregCommand,
    SimulateArgs, SweepArgs,
};

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Lamstar(a) => lamstar(a),
        Command::FixedPoint(a) => fixed_point_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Drift(a) => drift_cmd(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Prereg(PreregCommand::Lock { spec, out }) => prereg_lock(&spec, &out),
        Command::Prereg(PreregCommand::Check {
            lock,
            observed,
            out,
        }) => prereg_check(&lock, &observed, &out),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "none".into())
}

fn thr(t: Threshold) -> String {
    fmt_f64(t.value())
}

#[derive(Serialize)]
struct FixedPointOut {
    lambda: f64,
    q_star: f64,
    safe: bool,
    clamped: bool,
}

#[derive(Serialize)]
struct EntropyOut {
    gamma: f64,
    lambda_star: f64,
}

#[derive(Serialize)]
struct LamstarOut {
    p: f64,
    b: f64,
    c: f64,
    lambda_star: Threshold,
    q_c: f64,
    logit_q_c: f64,
    dlamstar_dp: Option<f64>,
    dlamstar_dlogitb: Option<f64>,
    entropy: Option<EntropyOut>,
    fixed_point: Option<FixedPointOut>,
    inputs_clamped: bool,
}

fn lamstar(a: LamstarArgs) -> Result<u8> {
    let r = ClipRegime::new(a.p, a.b, a.c)?;
    let fp = match a.lambda {
        Some(l) => {
            let f = fixed_point(&r, l)?;
            Some(FixedPointOut {
                lambda: l,
                q_star: f.q_star,
                safe: is_clip_safe(&r, l),
                clamped: f.clamped,
            })
        }
        None => None,
    };
    let entropy = match a.gamma {
        Some(g) => Some(EntropyOut {
            gamma: g,
            lambda_star: lam_star_entropy(&r, g)?,
        }),
        None => None,
    };
    let res = LamstarOut {
        p: r.p(),
        b: r.b(),
        c: r.c(),
        lambda_star: lam_star_with_tol(&r, a.tol),
        q_c: clip_boundary(&r),
        logit_q_c: logit_clip_boundary(&r),
        dlamstar_dp: dlamstar_dp(&r).ok(),
        dlamstar_dlogitb: dlamstar_dlogitb(&r).ok(),
        entropy,
        fixed_point: fp,
        inputs_clamped: r.clamped(),
    };
    let cfg = serde_json::json!({"p": a.p, "b": a.b, "c": a.c, "lambda": a.lambda, "gamma": a.gamma, "tol": a.tol});
    let m = RunManifest::new("lamstar", &cfg, vec![], None);
    emit(&a.out, &m, &res, || {
        let mut s = String::new();
        writeln!(s, "lambda_star = {}", thr(res.lambda_star)).unwrap();
        writeln!(s, "q_c = {}", fmt_f64(res.q_c)).unwrap();
        writeln!(s, "dlamstar_dp = {}", opt(res.dlamstar_dp)).unwrap();
        writeln!(s, "dlamstar_dlogitb = {}", opt(res.dlamstar_dlogitb)).unwrap();
        if let Some(e) = &res.entropy {
            writeln!(
                s,
                "lambda_star_entropy(gamma={}) = {}",
                e.gamma,
                fmt_f64(e.lambda_star)
            )
            .unwrap();
        }
        if let Some(f) = &res.fixed_point {
            writeln!(s, "q_star(lambda={}) = {}", f.lambda, fmt_f64(f.q_star)).unwrap();
            writeln!(s, "clip_safe = {}", f.safe).unwrap();
        }
        if res.inputs_clamped {
            writeln!(s, "warning: p or b clamped to [1e-15, 1-1e-15]").unwrap();
        }
        s
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct FixedPointCmdOut {
    lambda: f64,
    q_star: f64,
    logit_q_star: f64,
    q_c: f64,
    lambda_star: Threshold,
    safe: bool,
    clamped: bool,
}

fn fixed_point_cmd(a: FixedPointArgs) -> Result<u8> {
    let r = ClipRegime::new(a.p, a.b, a.c)?;
    let f = fixed_point(&r, a.lambda)?;
    let res = FixedPointCmdOut {
        lambda: a.lambda,
        q_star: f.q_star,
        logit_q_star: f.logit_q_star,
        q_c: f.q_c,
        lambda_star: cliffguard::threshold::lam_star(&r),
        safe: is_clip_safe(&r, a.lambda),
        clamped: f.clamped,
    };
    let cfg = serde_json::json!({"p": a.p, "b": a.b, "c": a.c, "lambda": a.lambda});
    let m = RunManifest::new("fixed-point", &cfg, vec![], None);
    emit(&a.out, &m, &res, || {
        format!(
            "q_star = {}\nq_c = {}\nlambda_star = {}\nclip_safe = {}\n",
            fmt_f64(res.q_star),
            fmt_f64(res.q_c),
            thr(res.lambda_star),
            res.safe
        )
    })?;
    Ok(0)
}

fn inputs(paths: &[&Path]) -> Result<Vec<InputRef>> {
    paths.iter().map(|p| InputRef::from_path(p)).collect()
}

#[derive(Serialize)]
struct SimulateOut {
    final_q: f64,
    first_passage_step: Option<u64>,
    clip_event_count: u64,
    theta_clamped: bool,
    lambda_star: Threshold,
    q_c: f64,
    q_star: f64,
}

fn simulate_cmd(a: SimulateArgs) -> Result<u8> {
    let file = config::load_file(&a.flow)?;
    let cfg = resolve_flow(&a.flow, &file, Mode::Deterministic)?;
    let traj = simulate(&cfg)?;
    let m = RunManifest::new(
        "simulate",
        &cfg,
        inputs(
            &a.flow
                .config
                .iter()
                .map(|p| p.as_path())
                .collect::<Vec<_>>(),
        )?,
        Some(cfg.seed),
    );
    if let Some(p) = &a.trajectory {
        write_csv(
            p,
            &m,
            &["step", "theta", "q", "lyapunov"],
            (0..traj.q_series.len()).map(|i| {
                vec![
                    i.to_string(),
                    fmt_f64(traj.theta_series[i]),
                    fmt_f64(traj.q_series[i]),
                    fmt_f64(traj.lyapunov_series[i]),
                ]
            }),
        )?;
    }
    let res = SimulateOut {
        final_q: traj.final_q(),
        first_passage_step: traj.first_passage_step,
        clip_event_count: traj.clip_event_count,
        theta_clamped: traj.theta_clamped,
        lambda_star: cliffguard::threshold::lam_star(&cfg.regime),
        q_c: clip_boundary(&cfg.regime),
        q_star: fixed_point(&cfg.regime, cfg.lambda)?.q_star,
    };
    emit(&a.out, &m, &res, || {
        format!(
            "final_q = {}\nfirst_passage_step = {}\nclip_events = {}\nlambda_star = {}\nq_c = {}\n",
            fmt_f64(res.final_q),
            res.first_passage_step
                .map(|s| s.to_string())
                .unwrap_or_else(|| "none".into()),
            res.clip_event_count,
            thr(res.lambda_star),
            fmt_f64(res.q_c)
        )
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct SweepConfigEcho<'a> {
    base: &'a FlowConfig,
    plan: &'a GridPlan,
}

#[derive(Serialize)]
struct SweepOut {
    lambda_star: Threshold,
    midpoint: Option<f64>,
    summary: Vec<LambdaSummary>,
}

fn sweep_cmd(a: SweepArgs) -> Result<u8> {
    let file = config::load_file(&a.flow)?;
    let base = resolve_flow(&a.flow, &file, Mode::Stochastic)?;
    let plan = resolve_grid(&a.grid, &file, base.seed)?;
    let table = sweep_lambda(&plan.grid, &base, &plan.seeds)?;
    let echo = SweepConfigEcho {
        base: &base,
        plan: &plan,
    };
    let m = RunManifest::new(
        "sweep",
        &echo,
        inputs(
            &a.flow
                .config
                .iter()
                .map(|p| p.as_path())
                .collect::<Vec<_>>(),
        )?,
        Some(base.seed),
    );
    if let Some(p) = &a.csv {
        write_csv(
            p,
            &m,
            &[
                "lambda",
                "seed",
                "final_q",
                "first_passage_step",
                "clip_events",
                "survival",
            ],
            table.rows.iter().map(|r| {
                vec![
                    fmt_f64(r.lambda),
                    r.seed.to_string(),
                    fmt_f64(r.final_q),
                    r.first_passage_step
                        .map(|s| s.to_string())
                        .unwrap_or_default(),
                    r.clip_events.to_string(),
                    r.survival.to_string(),
                ]
            }),
        )?;
    }
    let res = SweepOut {
        lambda_star: cliffguard::threshold::lam_star(&base.regime),
        midpoint: empirical_cliff_midpoint(&table, &plan.rule, Monitored::Survival).ok(),
        summary: table.summary(),
    };
    emit(&a.out, &m, &res, || {
        let mut s = String::from("lambda,survival_rate,mean_final_q,std_final_q\n");
        for r in &res.summary {
            writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(r.lambda),
                fmt_f64(r.survival_rate),
                fmt_f64(r.mean_final_q),
                fmt_f64(r.std_final_q)
            )
            .unwrap();
        }
        writeln!(s, "midpoint = {}", opt(res.midpoint)).unwrap();
        writeln!(s, "lambda_star = {}", thr(res.lambda_star)).unwrap();
        s
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct DriftEcho<'a> {
    base: &'a FlowConfig,
    plan: &'a GridPlan,
    budgets: &'a [u64],
}

#[derive(Serialize)]
struct DriftOut {
    lambda_star: Threshold,
    #[serde(flatten)]
    report: DriftReport,
}

fn drift_cmd(a: DriftArgs) -> Result<u8> {
    let file = config::load_file(&a.flow)?;
    let base = resolve_flow(&a.flow, &file, Mode::Stochastic)?;
    let plan = resolve_grid(&a.grid, &file, base.seed)?;
    let budgets = match &a.budgets {
        Some(s) => parse_u64_list(s)?,
        None => file.budgets.clone().unwrap_or_else(|| vec![base.steps]),
    };
    let report = first_passage_curve(&plan.grid, &budgets, &base, &plan.seeds, &plan.rule)?;
    let echo = DriftEcho {
        base: &base,
        plan: &plan,
        budgets: &budgets,
    };
    let m = RunManifest::new(
        "drift",
        &echo,
        inputs(
            &a.flow
                .config
                .iter()
                .map(|p| p.as_path())
                .collect::<Vec<_>>(),
        )?,
        Some(base.seed),
    );
    let res = DriftOut {
        lambda_star: cliffguard::threshold::lam_star(&base.regime),
        report,
    };
    emit(&a.out, &m, &res, || {
        let mut s = String::from("steps,midpoint\n");
        for b in &res.report.budgets {
            writeln!(s, "{},{}", b.steps, opt(b.midpoint)).unwrap();
        }
        writeln!(s, "leftward = {}", res.report.leftward).unwrap();
        writeln!(s, "lambda_star = {}", thr(res.lambda_star)).unwrap();
        s
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct CalibrationReport {
    source_label: String,
    tau: f64,
    c: f64,
    aggregates: Aggregates,
    intervals: BTreeMap<AggregatorKind, Ci>,
    bracket: PredictionBracket,
    subsample: Option<Vec<SubsampleRow>>,
    class_spread: Option<ClassSpreadTable>,
    b_sensitivity: Option<Vec<BSensitivityRow>>,
}

#[derive(Serialize)]
struct CalibrateEcho {
    tau: f64,
    c: f64,
    b: Option<f64>,
    bootstrap: usize,
    subsample_sizes: Option<Vec<usize>>,
    subsets: usize,
    class_spread: bool,
    b_grid: Option<Vec<f64>>,
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<u8> {
    let seed = resolve_seed(a.seed, None)?;
    let teacher = TraceSet::read_jsonl(&a.teacher)?;
    let warm = a
        .warmstart
        .as_deref()
        .map(TraceSet::read_jsonl)
        .transpose()?;
    let aggregates = aggregate_all(&teacher, a.tau)?;
    let req = BracketRequest {
        tau: a.tau,
        c: a.c,
        b_override: a.b,
        n_resamples: a.bootstrap,
        seed,
    };
    let bracket = predict_bracket(&teacher, warm.as_ref(), &req)?;
    let mut intervals = BTreeMap::new();
    if a.bootstrap > 0 {
        for k in AggregatorKind::ALL {
            intervals.insert(
                k,
                bootstrap_ci(&teacher, &AggregatorSpec::new(k, a.tau)?, a.bootstrap, seed)?,
            );
        }
    }
    let sizes: Option<Vec<usize>> = a
        .subsample_sizes
        .as_deref()
        .map(|s| parse_u64_list(s).map(|v| v.into_iter().map(|x| x as usize).collect()))
        .transpose()?;
    let subsample = match &sizes {
        Some(ns) => Some(subsample_variance(
            &teacher,
            &AggregatorSpec::new(AggregatorKind::Mean, a.tau)?,
            ns,
            a.subsets,
            a.bootstrap.max(cliffguard::calibration::MIN_RESAMPLES),
            bracket.b,
            a.c,
            seed,
        )?),
        None => None,
    };
    let spread = if a.class_spread {
        Some(class_spread(&teacher, a.tau, bracket.b, a.c)?)
    } else {
        None
    };
    let b_grid = a.b_grid.as_deref().map(parse_f64_list).transpose()?;
    let bsens = match &b_grid {
        Some(bs) => Some(b_sensitivity(bracket.p_typ, a.c, bs)?),
        None => None,
    };
    let echo = CalibrateEcho {
        tau: a.tau,
        c: a.c,
        b: a.b,
        bootstrap: a.bootstrap,
        subsample_sizes: sizes,
        subsets: a.subsets,
        class_spread: a.class_spread,
        b_grid,
    };
    let mut paths = vec![a.teacher.as_path()];
    if let Some(w) = &a.warmstart {
        paths.push(w.as_path());
    }
    let m = RunManifest::new("calibrate", &echo, inputs(&paths)?, Some(seed));
    let res = CalibrationReport {
        source_label: teacher.source_label.clone(),
        tau: a.tau,
        c: a.c,
        aggregates,
        intervals,
        bracket,
        subsample,
        class_spread: spread,
        b_sensitivity: bsens,
    };
    emit(&a.out, &m, &res, || {
        let b = &res.bracket;
        format!(
            "p_typ = {}\np_safe = {}\nb = {} ({:?})\nlambda_safe = {}\nlambda_typ = {}\n",
            fmt_f64(b.p_typ),
            fmt_f64(b.p_safe),
            fmt_f64(b.b),
            b.base_source,
            thr(b.lambda_safe),
            thr(b.lambda_typ)
        )
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct EvalOut {
    metrics: MetricsRecord,
}

fn eval_cmd(a: EvalArgs) -> Result<u8> {
    let records = read_corpus_jsonl(&a.corpus)?;
    let template = ContractTemplate {
        k: a.k,
        id_key: a.id_key.clone(),
        score_key: a.score_key.clone(),
        score_range: a.score_min.zip(a.score_max),
    };
    let report = evaluate_corpus(&records, &template, a.repair)?;
    #[derive(Serialize)]
    struct Echo<'a> {
        template: &'a ContractTemplate,
        repair: bool,
    }
    let m = RunManifest::new(
        "eval",
        &Echo {
            template: &template,
            repair: a.repair,
        },
        inputs(&[a.corpus.as_path()])?,
        None,
    );
    if let Some(p) = &a.csv {
        write_csv(
            p,
            &m,
            &["id", "valid", "failure_mode", "fmc", "kendall_tau", "ndcg1"],
            report.records.iter().map(|r| {
                vec![
                    r.id.clone(),
                    r.valid.to_string(),
                    r.failure_mode
                        .map(|f| f.as_str().to_string())
                        .unwrap_or_default(),
                    r.fmc.to_string(),
                    r.kendall_tau.map(fmt_f64).unwrap_or_default(),
                    r.ndcg1.map(fmt_f64).unwrap_or_default(),
                ]
            }),
        )?;
    }
    let res = EvalOut {
        metrics: report.metrics,
    };
    emit(&a.out, &m, &res, || {
        let mm = &res.metrics;
        let mut s = format!(
            "records = {}\nparse_rate = {}\nndcg@1 = {}\nkendall_tau = {}\nmae = {}\nU = {}\nfmc_rate = {}\n",
            mm.n_records,
            fmt_f64(mm.parse_rate),
            opt(mm.ndcg[&1]),
            opt(mm.kendall_tau),
            opt(mm.mae),
            fmt_f64(mm.u),
            fmt_f64(mm.fmc_rate)
        );
        for (k, v) in &mm.failure_histogram {
            writeln!(s, "failure.{} = {v}", k.as_str()).unwrap();
        }
        s
    })?;
    Ok(0)
}

fn prereg_lock(spec_path: &Path, out: &Path) -> Result<u8> {
    let spec: WindowSpec = read_json(spec_path)?;
    let locked = lock(spec)?;
    let mut s = serde_json::to_string_pretty(&locked)?;
    s.push('\n');
    write_file(out, &s)?;
    println!("locked {} digest={}", locked.spec.name, locked.lock_digest);
    Ok(0)
}

/// CSV observed sweep: a `lambda` column plus numeric columns, averaged per
/// lambda. Empty cells and the `seed` column are skipped.
fn read_observed_csv(path: &Path) -> Result<ObservedSweep> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let li = headers
        .iter()
        .position(|h| h == "lambda")
        .ok_or_else(|| Error::Config(format!("{}: no lambda column", path.display())))?;
    let mut groups: Vec<(f64, BTreeMap<String, (f64, usize)>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let l: f64 = rec[li]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{}: bad lambda '{}'", path.display(), &rec[li])))?;
        let idx = match groups.iter().position(|g| g.0 == l) {
            Some(i) => i,
            None => {
                groups.push((l, BTreeMap::new()));
                groups.len() - 1
            }
        };
        for (i, h) in headers.iter().enumerate() {
            if i == li || h == "seed" {
                continue;
            }
            if let Ok(v) = rec[i].trim().parse::<f64>() {
                let e = groups[idx].1.entry(h.to_string()).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ObservedSweep {
        rows: groups
            .into_iter()
            .map(|(lambda, m)| ObservedRow {
                lambda,
                values: m.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
            })
            .collect(),
        baselines: BTreeMap::new(),
    })
}

fn prereg_check(lock_path: &Path, observed_path: &Path, out: &crate::OutArgs) -> Result<u8> {
    let locked: LockedWindow = read_json(lock_path)?;
    let observed = if observed_path.extension().is_some_and(|e| e == "csv") {
        read_observed_csv(observed_path)?
    } else {
        read_json(observed_path)?
    };
    let report: VerdictReport = evaluate_verdict(&locked, &observed)?;
    let m = RunManifest::new(
        "prereg-check",
        &serde_json::json!({"lock_digest": locked.lock_digest}),
        inputs(&[lock_path, observed_path])?,
        None,
    );
    let code = report.verdict.exit_code();
    emit(out, &m, &report, || {
        let mut s = format!(
            "window {} [{}, {}]\nmidpoint = {}\n",
            report.window,
            report.lo,
            report.hi,
            opt(report.midpoint)
        );
        for c in &report.criteria {
            writeln!(
                s,
                "{:?} {}@{} {:?} {} observed={} {}",
                c.criterion.role,
                c.criterion.statistic,
                c.criterion
                    .lambda
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "baseline".into()),
                c.criterion.comparator,
                c.criterion.threshold,
                fmt_f64(c.observed),
                if c.holds { "ok" } else { "MISS" }
            )
            .unwrap();
        }
        writeln!(s, "verdict = {} ({})", report.verdict, report.reason).unwrap();
        s
    })?;
    Ok(code as u8)
}
