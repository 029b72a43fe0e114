//! Config-file parsing and flag > file > env > default resolution.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use cliffguard::flow::{Estimator, FlowConfig, Mode, Regularizer, UpdateRule};
use cliffguard::prereg::{RuleKind, ThresholdRule};
use cliffguard::threshold::ClipRegime;
use cliffguard::{Error, Result};

use crate::{FlowArgs, GridArgs};

pub const SEED_ENV: &str = "CLIFFGUARD_SEED";

/// Every field optional; unset fields fall back to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub steps: Option<u64>,
    pub q0: Option<f64>,
    pub update_rule: Option<UpdateRule>,
    pub estimator: Option<Estimator>,
    pub mode: Option<Mode>,
    pub regularizer: Option<Regularizer>,
    pub seed: Option<u64>,
    pub grid: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub budgets: Option<Vec<u64>>,
    pub rule: Option<ThresholdRule>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn enum_flag<T: DeserializeOwned>(name: &str, v: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|_| Error::Config(format!("unknown {name} '{v}'")))
}

/// `flag > file > CLIFFGUARD_SEED > 0`.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

pub fn load_file(args: &FlowArgs) -> Result<FileConfig> {
    match &args.config {
        Some(p) => read_json(p),
        None => Ok(FileConfig::default()),
    }
}

/// Resolve a flow config. `default_mode` applies when neither flag nor file sets one.
pub fn resolve_flow(args: &FlowArgs, file: &FileConfig, default_mode: Mode) -> Result<FlowConfig> {
    let p = args.p.or(file.p).unwrap_or(0.9);
    let b = args.b.or(file.b).unwrap_or(0.5);
    let c = args.c.or(file.c).unwrap_or(5.0);
    let lambda = args.lambda.or(file.lambda).unwrap_or(1.0);
    let mut cfg = FlowConfig::new(ClipRegime::new(p, b, c)?, lambda);
    if let Some(v) = args.eta.or(file.eta) {
        cfg.eta = v;
    }
    if let Some(v) = args.steps.or(file.steps) {
        cfg.steps = v;
    }
    if let Some(v) = args.q0.or(file.q0) {
        cfg.q0 = v;
    }
    cfg.update_rule = match &args.rule {
        Some(s) => enum_flag("rule", s)?,
        None => file.update_rule.unwrap_or(cfg.update_rule),
    };
    cfg.estimator = match &args.estimator {
        Some(s) => enum_flag("estimator", s)?,
        None => file.estimator.unwrap_or(cfg.estimator),
    };
    cfg.mode = match &args.mode {
        Some(s) => enum_flag("mode", s)?,
        None => file.mode.unwrap_or(default_mode),
    };
    let flag_regs: Vec<Regularizer> = [
        args.beta.map(|beta| Regularizer::KlToBase { beta }),
        args.gamma.map(|gamma| Regularizer::EntropyBonus { gamma }),
        args.warmup_steps
            .map(|warmup_steps| Regularizer::LambdaWarmup { warmup_steps }),
    ]
    .into_iter()
    .flatten()
    .collect();
    cfg.regularizer = match flag_regs.as_slice() {
        [] => file.regularizer.unwrap_or_default(),
        [r] => *r,
        _ => {
            return Err(Error::Config(
                "at most one of --beta, --gamma, --warmup-steps".into(),
            ))
        }
    };
    cfg.seed = resolve_seed(args.seed, file.seed)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("'{x}' is not a number")))
        })
        .collect()
}

pub fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("'{x}' is not an unsigned integer")))
        })
        .collect()
}

/// `start:stop:step` (inclusive, values rounded to 12 decimals) or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 1 {
        return parse_f64_list(s);
    }
    if parts.len() != 3 {
        return Err(Error::Config(format!("grid '{s}' is not start:stop:step")));
    }
    let v = parse_f64_list(&parts.join(","))?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!(
            "grid '{s}' needs step > 0 and stop >= start"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// `a..b` or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range '{s}'")))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range '{s}'")))?;
        if b <= a {
            return Err(Error::Config(format!("empty seed range '{s}'")));
        }
        return Ok((a..b).collect());
    }
    parse_u64_list(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPlan {
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub rule: ThresholdRule,
}

pub fn resolve_grid(args: &GridArgs, file: &FileConfig, base_seed: u64) -> Result<GridPlan> {
    let grid = match &args.grid {
        Some(s) => parse_grid(s)?,
        None => file.grid.clone().ok_or_else(|| {
            Error::Config("a lambda grid is required (--grid or config 'grid')".into())
        })?,
    };
    let seeds = match &args.seeds {
        Some(s) => parse_seeds(s)?,
        None => file
            .seeds
            .clone()
            .unwrap_or_else(|| (base_seed..base_seed + 16).collect()),
    };
    let mut rule = file.rule.unwrap_or_default();
    if let Some(k) = &args.rule_kind {
        rule.kind = enum_flag::<RuleKind>("rule kind", k)?;
    }
    if let Some(l) = args.rule_level {
        rule.level = l;
    }
    rule.validate()?;
    Ok(GridPlan { grid, seeds, rule })
}
