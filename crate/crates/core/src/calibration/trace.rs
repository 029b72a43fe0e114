//! Teacher/warmstart modal-probability traces and their JSONL form.
//!
//! One JSON object per line:
//! `{"prompt_id": "p0", "positions": [{"index": 0, "modal_prob": 0.99}, ...]}`
//! or the compact `{"prompt_id": "p0", "modal_probs": [0.99, ...]}` with
//! indices `0..n`.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub index: u64,
    pub modal_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTrace {
    pub prompt_id: String,
    pub positions: Vec<Position>,
}

impl PromptTrace {
    /// Positions `0..n` with the given modal probabilities.
    pub fn from_probs(prompt_id: impl Into<String>, probs: &[f64]) -> Self {
        PromptTrace {
            prompt_id: prompt_id.into(),
            positions: probs
                .iter()
                .enumerate()
                .map(|(i, &p)| Position {
                    index: i as u64,
                    modal_prob: p,
                })
                .collect(),
        }
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.iter().map(|p| p.modal_prob)
    }

    fn check(&self) -> std::result::Result<(), String> {
        for w in self.positions.windows(2) {
            if w[1].index <= w[0].index {
                return Err(format!(
                    "prompt {}: indices must be strictly increasing ({} then {})",
                    self.prompt_id, w[0].index, w[1].index
                ));
            }
        }
        for p in &self.positions {
            if !(p.modal_prob > 0.0 && p.modal_prob <= 1.0) {
                return Err(format!(
                    "prompt {}: modal_prob {} at index {} is outside (0, 1]",
                    self.prompt_id, p.modal_prob, p.index
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    pub prompts: Vec<PromptTrace>,
    pub source_label: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    prompt_id: String,
    #[serde(default)]
    positions: Option<Vec<Position>>,
    #[serde(default)]
    modal_probs: Option<Vec<f64>>,
}

impl TraceSet {
    pub fn new(prompts: Vec<PromptTrace>, source_label: impl Into<String>) -> Result<Self> {
        let t = TraceSet {
            prompts,
            source_label: source_label.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, p) in self.prompts.iter().enumerate() {
            let fail = |msg: String| Error::Trace {
                path: self.source_label.clone(),
                line: i + 1,
                msg,
            };
            if !seen.insert(p.prompt_id.as_str()) {
                return Err(fail(format!("duplicate prompt_id {}", p.prompt_id)));
            }
            p.check().map_err(fail)?;
        }
        Ok(())
    }

    pub fn n_positions(&self) -> usize {
        self.prompts.iter().map(|p| p.positions.len()).sum()
    }

    pub fn from_jsonl_str(text: &str, label: &str) -> Result<Self> {
        let mut prompts = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let fail = |msg: String| Error::Trace {
                path: label.to_string(),
                line: i + 1,
                msg,
            };
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawLine = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
            let pt = match (raw.positions, raw.modal_probs) {
                (Some(positions), None) => PromptTrace {
                    prompt_id: raw.prompt_id,
                    positions,
                },
                (None, Some(probs)) => PromptTrace::from_probs(raw.prompt_id, &probs),
                _ => {
                    return Err(fail(
                        "exactly one of positions or modal_probs is required".into(),
                    ))
                }
            };
            pt.check().map_err(fail)?;
            if !seen.insert(pt.prompt_id.clone()) {
                return Err(fail(format!("duplicate prompt_id {}", pt.prompt_id)));
            }
            prompts.push(pt);
        }
        Ok(TraceSet {
            prompts,
            source_label: label.to_string(),
        })
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl_str(&text, &path.display().to_string())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f =
            std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for p in &self.prompts {
            let line = serde_json::to_string(p)?;
            writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
        }
        f.flush().map_err(|e| Error::io(path, e))
    }
}
