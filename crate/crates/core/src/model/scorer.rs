use std::sync::atomic::{AtomicU64, Ordering};

use super::Model;
use crate::graph::{Side, Triple};

/// Read access to a model's scoring function.
///
/// Attack heuristics score through this trait so that a [`CountingScorer`] can
/// record how many triple evaluations they perform.
pub trait Scorer: Sync {
    fn model(&self) -> &Model;

    /// Called with the number of triple evaluations about to be performed.
    fn record(&self, _evaluations: u64) {}

    fn score(&self, t: Triple) -> f64 {
        self.record(1);
        self.model().score(t)
    }

    fn score_embeddings(&self, s: &[f64], r: &[f64], o: &[f64]) -> f64 {
        self.record(1);
        self.model().score_embeddings(s, r, o)
    }

    fn score_all(&self, t: &Triple, side: Side) -> Vec<f64> {
        self.record(self.model().n_entities() as u64);
        self.model().score_all(t, side)
    }
}

impl Scorer for Model {
    fn model(&self) -> &Model {
        self
    }
}

/// Scorer that counts every triple evaluation.
#[derive(Debug)]
pub struct CountingScorer<'a> {
    model: &'a Model,
    calls: AtomicU64,
}

impl<'a> CountingScorer<'a> {
    pub fn new(model: &'a Model) -> Self {
        Self {
            model,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl Scorer for CountingScorer<'_> {
    fn model(&self) -> &Model {
        self.model
    }

    fn record(&self, evaluations: u64) {
        self.calls.fetch_add(evaluations, Ordering::Relaxed);
    }
}
