//! Shared test fixtures: a corrupted K-list generator, an independent
//! classifier for it, and synthetic trace builders.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use cliffguard::calibration::{PromptTrace, TraceSet};
use cliffguard::contract::{FailureMode, ListContract};

/// One generated output with the corruption that produced it.
#[derive(Debug, Clone)]
pub struct Case {
    pub ids: Vec<String>,
    pub text: String,
    pub score_range: Option<(f64, f64)>,
    pub corruption: &'static str,
}

impl Case {
    pub fn contract(&self) -> ListContract {
        let c = ListContract::new(self.ids.clone(), "review_id").unwrap();
        match self.score_range {
            Some((lo, hi)) => c.with_score_range(lo, hi).unwrap(),
            None => c,
        }
    }
}

#[derive(Debug, Clone)]
enum Field {
    Str(String),
    Raw(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Str(s) => serde_json::to_string(s).unwrap(),
            Field::Raw(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct Elem {
    id: Option<Field>,
    score: Option<Field>,
    extra: bool,
}

fn render_list(elems: &[Elem], rng: &mut dyn RngCore) -> String {
    let parts: Vec<String> = elems
        .iter()
        .map(|e| {
            let mut kv = Vec::new();
            if let Some(id) = &e.id {
                kv.push(format!("\"review_id\": {}", id.render()));
            }
            if let Some(s) = &e.score {
                kv.push(format!("\"score\":{}", s.render()));
            }
            if e.extra {
                kv.push("\"note\": \"see [ref] \\\"x]\\\"\"".to_string());
            }
            if rng.random_bool(0.5) {
                kv.reverse();
            }
            format!("{{{}}}", kv.join(", "))
        })
        .collect();
    format!(
        "[{}]",
        parts.join(if rng.random_bool(0.5) { "," } else { ",\n  " })
    )
}

fn valid_score(rng: &mut dyn RngCore) -> Field {
    match rng.random_range(0..4) {
        0 => Field::Raw(rng.random_range(0..10).to_string()),
        1 => Field::Raw(format!("{:.2}", rng.random_range(0.0..10.0))),
        2 => Field::Str(format!("{:.1}", rng.random_range(0.0..10.0))),
        _ => Field::Raw(format!("{}e0", rng.random_range(0..10))),
    }
}

fn bad_score(rng: &mut dyn RngCore, ranged: bool) -> Field {
    let opts: &[&str] = if ranged {
        &["\"high\"", "null", "true", "\"NaN\"", "[1]", "11", "-0.5"]
    } else {
        &["\"high\"", "null", "true", "\"NaN\"", "[1]", "\"inf\""]
    };
    Field::Raw(opts[rng.random_range(0..opts.len())].to_string())
}

fn wrap(body: String, rng: &mut dyn RngCore) -> String {
    match rng.random_range(0..4) {
        0 => body,
        1 => format!("Here is the ranking:\n{body}\nDone."),
        2 => format!("```json\n{body}\n```"),
        _ => format!("Sure. {body} Let me know if you need more."),
    }
}

const CORRUPTIONS: [&str; 13] = [
    "none",
    "drop_one",
    "length",
    "hallucinate",
    "position_only",
    "duplicate",
    "bad_score",
    "no_id_key",
    "non_object",
    "truncate",
    "no_brackets",
    "trailing_comma",
    "combo",
];

/// A random K-list, clean or with one (or two, for `combo`) corruptions.
pub fn generate_case(rng: &mut impl RngCore) -> Case {
    let k = rng.random_range(2..=8);
    let fancy = rng.random_bool(0.2);
    let ids: Vec<String> = (0..k)
        .map(|i| {
            if fancy {
                format!("rev]{i}\"q")
            } else {
                format!("r{i}")
            }
        })
        .collect();
    let ranged = rng.random_bool(0.3);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut elems: Vec<Elem> = order
        .iter()
        .map(|&i| Elem {
            id: Some(Field::Str(ids[i].clone())),
            score: Some(valid_score(rng)),
            extra: rng.random_bool(0.1),
        })
        .collect();
    let corruption = CORRUPTIONS[rng.random_range(0..CORRUPTIONS.len())];

    let apply = |what: &str, elems: &mut Vec<Elem>, rng: &mut dyn RngCore| match what {
        "drop_one" if elems.len() > 1 => {
            let j = rng.random_range(0..elems.len());
            elems.remove(j);
        }
        "length" => {
            if rng.random_bool(0.5) && elems.len() >= 3 {
                elems.truncate(elems.len() - 2);
            } else {
                let extra = elems[0].clone();
                elems.push(extra);
            }
        }
        "hallucinate" => {
            let j = rng.random_range(0..elems.len());
            elems[j].id = Some(Field::Str(format!("fake{}", rng.random_range(0..100))));
        }
        "position_only" => {
            let j = rng.random_range(0..elems.len());
            elems[j].id = Some(Field::Raw(j.to_string()));
        }
        "duplicate" => {
            if elems.len() >= 2 {
                let a = rng.random_range(0..elems.len());
                let mut b = rng.random_range(0..elems.len());
                if a == b {
                    b = (a + 1) % elems.len();
                }
                elems[b].id = elems[a].id.clone();
            }
        }
        "bad_score" => {
            let j = rng.random_range(0..elems.len());
            if rng.random_bool(0.2) {
                elems[j].score = None;
            } else {
                elems[j].score = Some(bad_score(rng, ranged));
            }
        }
        "no_id_key" => {
            let j = rng.random_range(0..elems.len());
            elems[j].id = None;
        }
        _ => {}
    };

    let text = match corruption {
        "none" => wrap(render_list(&elems, rng), rng),
        "non_object" => {
            let mut s = render_list(&elems, rng);
            s.insert_str(1, "42, ");
            wrap(s, rng)
        }
        "truncate" => {
            let s = render_list(&elems, rng);
            let mut cut = rng.random_range(1..s.len());
            while !s.is_char_boundary(cut) {
                cut -= 1;
            }
            let prefix = if rng.random_bool(0.5) { "Answer: " } else { "" };
            format!("{prefix}{}", &s[..cut.max(1)])
        }
        "no_brackets" => "I could not rank these reviews.".to_string(),
        "trailing_comma" => {
            let s = render_list(&elems, rng);
            wrap(format!("{},]", &s[..s.len() - 1]), rng)
        }
        "combo" => {
            let pool = [
                "drop_one",
                "hallucinate",
                "duplicate",
                "bad_score",
                "no_id_key",
                "length",
            ];
            let a = pool[rng.random_range(0..pool.len())];
            let b = pool[rng.random_range(0..pool.len())];
            apply(a, &mut elems, rng);
            apply(b, &mut elems, rng);
            wrap(render_list(&elems, rng), rng)
        }
        other => {
            apply(other, &mut elems, rng);
            wrap(render_list(&elems, rng), rng)
        }
    };
    Case {
        ids,
        text,
        score_range: ranged.then_some((0.0, 10.0)),
        corruption,
    }
}

/// Independent classifier. It locates the list by asking a streaming JSON
/// reader for the first value starting at the first `[`: an EOF error there
/// means the list never closed. Valid-prefix truncation is the only way the
/// generator produces unclosed lists, so EOF is an exact runaway signal on
/// this input family.
pub fn oracle(
    text: &str,
    ids: &[String],
    range: Option<(f64, f64)>,
) -> (Option<FailureMode>, bool) {
    use serde_json::Value;
    let Some(start) = text.find('[') else {
        return (Some(FailureMode::Malformed), false);
    };
    let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
    let arr = match stream.next() {
        Some(Ok(Value::Array(a))) => a,
        Some(Err(e)) if e.is_eof() => return (Some(FailureMode::RunawayPrefix), false),
        _ => return (Some(FailureMode::Malformed), false),
    };
    let mut objs = Vec::new();
    for v in &arr {
        match v {
            Value::Object(m) => objs.push(m),
            _ => return (Some(FailureMode::Malformed), false),
        }
    }
    let k = ids.len();
    let n = objs.len();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut unknown = 0;
    for o in &objs {
        match o.get("review_id") {
            Some(Value::String(s)) if ids.contains(s) => {
                *counts.entry(s.as_str()).or_default() += 1
            }
            _ => unknown += 1,
        }
    }
    let fmc = n + 1 == k && unknown == 0 && counts.values().all(|&c| c == 1);
    let score_ok = |v: Option<&Value>| -> bool {
        let x = match v {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
            _ => None,
        };
        match x {
            Some(x) if x.is_finite() => range.is_none_or(|(lo, hi)| lo <= x && x <= hi),
            _ => false,
        }
    };
    let mode = if n + 1 < k || n > k {
        Some(FailureMode::LengthMismatch)
    } else if n + 1 == k {
        Some(FailureMode::TruncationKMinus1)
    } else if unknown > 0 {
        Some(FailureMode::HallucinatedId)
    } else if counts.values().any(|&c| c > 1) {
        Some(FailureMode::DuplicateId)
    } else if counts.len() < k {
        Some(FailureMode::MissingId)
    } else if !objs.iter().all(|o| score_ok(o.get("score"))) {
        Some(FailureMode::NonNumericScore)
    } else {
        None
    };
    (mode, fmc)
}

/// `n_prompts` prompts of `len` positions drawn i.i.d. from `draw`.
pub fn iid_trace(
    rng: &mut impl Rng,
    n_prompts: usize,
    len: usize,
    draw: impl Fn(&mut dyn RngCore) -> f64,
) -> TraceSet {
    let prompts = (0..n_prompts)
        .map(|i| {
            let probs: Vec<f64> = (0..len).map(|_| draw(rng)).collect();
            PromptTrace::from_probs(format!("p{i}"), &probs)
        })
        .collect();
    TraceSet::new(prompts, "synthetic").unwrap()
}

/// Ten 20-position prompts whose pooled mean is `p_typ` and whose largest
/// prompt mean is `p_safe`; every value lies well above 0.9.
pub fn shaped_teacher(p_typ: f64, p_safe: f64) -> TraceSet {
    let n = 10usize;
    let len = 20usize;
    let rest = (n as f64 * p_typ - p_safe) / (n - 1) as f64;
    let mut prompts = vec![PromptTrace::from_probs("p0", &vec![p_safe; len])];
    for j in 1..n {
        let m = rest + (j as f64 - 5.0) * 1e-6;
        let probs: Vec<f64> = (0..len)
            .map(|i| m + if i % 2 == 0 { 2e-6 } else { -2e-6 })
            .collect();
        prompts.push(PromptTrace::from_probs(format!("p{j}"), &probs));
    }
    TraceSet::new(prompts, "shaped").unwrap()
}

/// Warmstart trace whose log ratio to `teacher` is `ell` at every position.
pub fn warmstart_for(teacher: &TraceSet, ell: f64) -> TraceSet {
    let prompts = teacher
        .prompts
        .iter()
        .map(|p| {
            let probs: Vec<f64> = p.probs().map(|x| x * (-ell).exp()).collect();
            PromptTrace::from_probs(p.prompt_id.clone(), &probs)
        })
        .collect();
    TraceSet::new(prompts, "warmstart").unwrap()
}
