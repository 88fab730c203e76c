//! Sampling algorithms: the seeded random baseline, the patient add-only
//! greedy method, and the impatient add-remove-replace local search.
//!
//! All samplers are deterministic given (corpus, config, seed). Candidate
//! evaluation is sequential; the contract is that any future pipelining
//! must reproduce the sequential result exactly.

mod impatient;
mod patient;
mod random;

pub use impatient::{sample_impatient, ImpatientConfig, MarginMode};
pub use patient::{sample_patient, PatientConfig};
pub use random::{sample_random, RandomConfig, RandomTarget};

use serde::Serialize;

use crate::entropy::LogBase;

/// Outcome of one sampler run.
#[derive(Debug, Clone, Serialize)]
pub struct SamplerResult {
    /// Selected sentence ids, ascending.
    pub selected: Vec<usize>,
    pub n_selected: usize,
    pub token_total: u64,
    /// Entropy of the whole selection, in `log_base` units.
    pub entropy: f64,
    /// Entropy of the selection minus the sampler's base, `None` when that
    /// part is empty.
    pub entropy_extension: Option<f64>,
    /// Algorithm-specific work counter: appends (patient), passes
    /// (impatient), descent steps (gradient), draws (random).
    pub steps: u64,
    pub wall_s: f64,
    pub seed: u64,
    pub log_base: LogBase,
}

/// Progress events emitted by the samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProgressEvent {
    /// Periodic scan heartbeat: candidates scanned so far, appends (or
    /// actions) executed, current entropy, current selection size.
    Scan {
        scanned: u64,
        appends: u64,
        h: f64,
        n_selected: usize,
    },
    /// A sentence was committed to the selection.
    Append { id: usize, h: f64, n_selected: usize },
    /// An impatient-sampler action was executed.
    Action {
        kind: ActionKind,
        id: usize,
        h: f64,
        n_selected: usize,
    },
    /// One gradient-descent step: loss, relaxed entropy (log-base units)
    /// and mean distance of the membership vector from {0, 1}.
    GradStep {
        step: u32,
        loss: f64,
        h: f64,
        mean_gap: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Add,
    Remove,
    Replace,
}

/// Receives progress events at a configurable stride.
pub trait ProgressSink {
    fn on_event(&mut self, event: &ProgressEvent);
}

/// Discards all events.
pub struct NullSink;

impl ProgressSink for NullSink {
    fn on_event(&mut self, _event: &ProgressEvent) {}
}

/// Collects all events; used by tests and the harness trace writer.
#[derive(Default)]
pub struct CollectSink {
    pub events: Vec<ProgressEvent>,
}

impl ProgressSink for CollectSink {
    fn on_event(&mut self, event: &ProgressEvent) {
        self.events.push(event.clone());
    }
}

impl<F: FnMut(&ProgressEvent)> ProgressSink for F {
    fn on_event(&mut self, event: &ProgressEvent) {
        self(event)
    }
}
