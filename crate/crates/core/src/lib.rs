//! Clip-safety analysis for sharpened reverse-KL distillation.
//!
//! - [`threshold`]: closed-form clip threshold and its sensitivities.
//! - [`flow`]: deterministic and stochastic simulation of the clipped flow.
//! - [`calibration`]: teacher-trace aggregators, bootstrap CIs and brackets.
//! - [`contract`]: strict-K list parsing, repair and ranking metrics.
//! - [`prereg`]: locked prediction windows and verdicts.

pub mod calibration;
pub mod contract;
pub mod error;
pub mod flow;
pub mod manifest;
pub mod prereg;
pub mod prob;
pub mod threshold;

pub use error::{Error, Result};
