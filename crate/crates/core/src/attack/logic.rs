//! Product t-norm soft logic over triple scores.

use crate::graph::Triple;
use crate::model::Scorer;
use crate::train::sigmoid;

/// Truth value of a single atom: `sigmoid(f(s, r, o))`.
pub fn soft_truth_atom<S: Scorer + ?Sized>(scorer: &S, t: Triple) -> f64 {
    sigmoid(scorer.score(t))
}

pub fn and(a: f64, b: f64) -> f64 {
    a * b
}

pub fn or(a: f64, b: f64) -> f64 {
    a + b - a * b
}

pub fn not(a: f64) -> f64 {
    1.0 - a
}

/// `body => head`, i.e. `not(body and not(head))`.
pub fn implies(body: f64, head: f64) -> f64 {
    head * body + (1.0 - body)
}

/// Truth value of a grounded clause whose body atoms have the given scores.
///
/// Equals `B * h - B + 1 = 1 - B * (1 - h)` with `B` the product of the body
/// scores. It is exactly `h` when `B == 1` and exactly `1` when `B == 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GroundingScore(pub f64);

impl GroundingScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn ground_score(body: &[f64], head: f64) -> GroundingScore {
    let conj = body.iter().copied().fold(1.0, and);
    GroundingScore(implies(conj, head))
}
