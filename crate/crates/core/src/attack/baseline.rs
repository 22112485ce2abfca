//! Random edit baselines.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AdversarialEdit, AttackOutput, Skip, SkipReason};
use crate::error::{Error, Result};
use crate::graph::{Dataset, EntityId, RelationId, Side, Triple};

/// Resampling attempts per edit before the edit is skipped.
pub const MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// One random triple touching the target entity, per side.
    RandomN,
    /// One random triple anywhere in the graph, per side.
    RandomG1,
    /// Two random triples anywhere in the graph, per side.
    RandomG2,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::RandomN, BaselineKind::RandomG1, BaselineKind::RandomG2];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::RandomN => "random_n",
            BaselineKind::RandomG1 => "random_g1",
            BaselineKind::RandomG2 => "random_g2",
        }
    }

    /// Display name such as `Random_n`.
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::RandomN => "Random_n",
            BaselineKind::RandomG1 => "Random_g1",
            BaselineKind::RandomG2 => "Random_g2",
        }
    }

    pub fn per_side(self) -> usize {
        match self {
            BaselineKind::RandomG2 => 2,
            _ => 1,
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random_n" => Ok(BaselineKind::RandomN),
            "random_g1" => Ok(BaselineKind::RandomG1),
            "random_g2" => Ok(BaselineKind::RandomG2),
            _ => Err(Error::Config(format!("unknown baseline {s:?}"))),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn sample(rng: &mut ChaCha8Rng, kind: BaselineKind, anchor: EntityId, n_e: u32, n_r: u32) -> Triple {
    let r: RelationId = rng.random_range(0..n_r);
    match kind {
        BaselineKind::RandomN => {
            let other = rng.random_range(0..n_e);
            if rng.random_bool(0.5) {
                Triple::new(anchor, r, other)
            } else {
                Triple::new(other, r, anchor)
            }
        }
        _ => Triple::new(rng.random_range(0..n_e), r, rng.random_range(0..n_e)),
    }
}

/// Random additions at the same per-target budget as the pattern attacks.
///
/// Samples that already exist in any split or were already emitted are redrawn
/// up to [`MAX_RETRIES`] times. Output depends only on the inputs and `seed`.
pub fn generate_random_baseline(dataset: &Dataset, targets: &[Triple], kind: BaselineKind, seed: u64) -> AttackOutput {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_e = dataset.n_entities() as u32;
    let n_r = dataset.n_relations() as u32;
    let mut taken: HashSet<Triple> = dataset.all_triples().copied().collect();
    let mut out = AttackOutput::empty(kind.name());
    for target in targets {
        for side in Side::BOTH {
            let anchor = target.entity(side);
            let mut triples = Vec::new();
            for _ in 0..kind.per_side() {
                let drawn = (0..MAX_RETRIES)
                    .map(|_| sample(&mut rng, kind, anchor, n_e, n_r))
                    .find(|t| !taken.contains(t));
                match drawn {
                    Some(t) => {
                        taken.insert(t);
                        triples.push(t);
                    }
                    None => out.skipped.push(Skip {
                        target: *target,
                        side,
                        reason: SkipReason::RetriesExhausted,
                    }),
                }
            }
            if !triples.is_empty() {
                out.edits.push(AdversarialEdit {
                    triples,
                    pattern: kind.as_str().to_string(),
                    heuristic: "none".to_string(),
                    target: *target,
                    side,
                    decoy: None,
                });
            }
        }
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Vocabulary;

    fn toy() -> Dataset {
        let train = (0..20).map(|i| Triple::new(i, i % 3, (i + 1) % 30)).collect();
        let test = vec![Triple::new(3, 0, 7), Triple::new(8, 1, 2), Triple::new(11, 2, 12)];
        Dataset::from_parts(Vocabulary::synthetic(30, 3), train, vec![], test).unwrap()
    }

    #[test]
    fn neighbourhood_edits_touch_target() {
        let d = toy();
        let out = generate_random_baseline(&d, &d.test, BaselineKind::RandomN, 5);
        assert_eq!(out.n_triples(), 6);
        for e in &out.edits {
            let anchor = e.target.entity(e.side);
            for t in &e.triples {
                assert!(t.subject == anchor || t.object == anchor);
            }
        }
    }

    #[test]
    fn budgets() {
        let d = toy();
        assert!(generate_random_baseline(&d, &d.test, BaselineKind::RandomG1, 1).n_triples() <= 2 * d.test.len());
        assert!(generate_random_baseline(&d, &d.test, BaselineKind::RandomG2, 1).n_triples() <= 4 * d.test.len());
    }

    #[test]
    fn seeded_determinism_and_novelty() {
        let d = toy();
        let a = generate_random_baseline(&d, &d.test, BaselineKind::RandomG2, 9);
        let b = generate_random_baseline(&d, &d.test, BaselineKind::RandomG2, 9);
        assert_eq!(a.edits, b.edits);
        let existing: HashSet<Triple> = d.all_triples().copied().collect();
        let triples = a.triples();
        let unique: HashSet<Triple> = triples.iter().copied().collect();
        assert_eq!(unique.len(), triples.len());
        assert!(triples.iter().all(|t| !existing.contains(t)));
    }

    #[test]
    fn saturated_graph_exhausts_retries() {
        let mut train = Vec::new();
        for s in 0..2 {
            for o in 0..2 {
                train.push(Triple::new(s, 0, o));
            }
        }
        let d = Dataset::from_parts(Vocabulary::synthetic(2, 1), train, vec![], vec![]).unwrap();
        let out = generate_random_baseline(&d, &[Triple::new(0, 0, 1)], BaselineKind::RandomN, 0);
        assert!(out.edits.is_empty());
        assert_eq!(out.skipped.len(), 2);
    }
}
