//! Threat-model compliance checks over a generated attack.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{AttackOutput, Pattern};
use crate::graph::{Dataset, Side, Triple};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PreexistingEdit(Triple),
    EditIsDecoy(Triple),
    MultipleDecoys { target: Triple, side: Side, count: usize },
    OverBudget { target: Triple, triples: usize, limit: usize },
    UnknownId(Triple),
    NotIncident { edit: Triple, decoy: Triple },
    DuplicateEdit(Triple),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PreexistingEdit(t) => write!(f, "edit {t} already in train"),
            Violation::EditIsDecoy(t) => write!(f, "edit {t} is a decoy triple"),
            Violation::MultipleDecoys { target, side, count } => {
                write!(f, "{count} decoys for {target} on the {side} side")
            }
            Violation::OverBudget { target, triples, limit } => {
                write!(f, "{triples} edit triples for {target}, limit {limit}")
            }
            Violation::UnknownId(t) => write!(f, "edit {t} uses an id outside the vocabulary"),
            Violation::NotIncident { edit, decoy } => write!(f, "edit {edit} shares no entity with decoy {decoy}"),
            Violation::DuplicateEdit(t) => write!(f, "edit {t} emitted twice"),
        }
    }
}

/// Per-target edit limit: one decoy per side times the pattern's body size.
pub fn budget(pattern: Option<Pattern>, per_side: usize) -> usize {
    2 * pattern.map_or(per_side, Pattern::triples_per_decoy)
}

/// Checks an attack against the original (unpoisoned) dataset.
///
/// `pattern` is `None` for baselines, which carry no decoys; `per_side` is the
/// baseline's triples per side and is ignored for pattern attacks.
pub fn audit(dataset: &Dataset, output: &AttackOutput, pattern: Option<Pattern>, per_side: usize) -> Vec<Violation> {
    let mut violations = Vec::new();
    let train = dataset.train_set();
    let decoy_triples: HashSet<Triple> = output.decoys.iter().map(|d| d.decoy_triple()).collect();

    let mut per_key: HashMap<(Triple, Side), usize> = HashMap::new();
    for d in &output.decoys {
        *per_key.entry((d.target, d.side)).or_default() += 1;
    }
    for ((target, side), count) in per_key {
        if count > 1 {
            violations.push(Violation::MultipleDecoys { target, side, count });
        }
    }

    let limit = budget(pattern, per_side);
    let mut per_target: HashMap<Triple, usize> = HashMap::new();
    let mut seen = HashSet::new();
    for edit in &output.edits {
        *per_target.entry(edit.target).or_default() += edit.triples.len();
        let decoy = edit.decoy.map(|e| edit.target.with_entity(edit.side, e));
        for t in &edit.triples {
            if train.contains(t) {
                violations.push(Violation::PreexistingEdit(*t));
            }
            if decoy_triples.contains(t) {
                violations.push(Violation::EditIsDecoy(*t));
            }
            if !dataset.vocabulary.contains(t) {
                violations.push(Violation::UnknownId(*t));
            }
            if !seen.insert(*t) {
                violations.push(Violation::DuplicateEdit(*t));
            }
            if let Some(d) = decoy {
                let touches = [t.subject, t.object].iter().any(|&e| e == d.subject || e == d.object);
                if !touches {
                    violations.push(Violation::NotIncident { edit: *t, decoy: d });
                }
            }
        }
    }
    for (target, triples) in per_target {
        if triples > limit {
            violations.push(Violation::OverBudget { target, triples, limit });
        }
    }
    violations
}
