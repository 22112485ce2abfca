//! Synthetic graphs with planted relation patterns.
//!
//! Entities are split into equal communities. Symmetric relations link random
//! pairs inside a community in both directions; asymmetric relations link each
//! entity to one entity of the next community. Valid and test triples are
//! single held-out directions of symmetric pairs, so a model can only rank them
//! well by learning symmetry.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{Dataset, Triple, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_entities: usize,
    pub communities: usize,
    pub symmetric_relations: usize,
    pub asymmetric_relations: usize,
    /// Probability that a given intra-community pair is linked by a symmetric relation.
    pub pair_prob: f64,
    /// Number of symmetric pairs held out (one direction each) for valid and for test.
    pub held_out: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// About 2,000 training triples over 200 entities.
    fn default() -> Self {
        Self {
            n_entities: 200,
            communities: 20,
            symmetric_relations: 3,
            asymmetric_relations: 2,
            pair_prob: 0.3,
            held_out: 40,
            seed: 0,
        }
    }
}

pub fn symmetric_kg(config: &SynthConfig) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_entities;
    let size = n / config.communities.max(1);
    let n_rel = config.symmetric_relations + config.asymmetric_relations;

    let mut pairs = Vec::new();
    for c in 0..config.communities {
        let members: Vec<u32> = (c * size..(c + 1) * size).map(|e| e as u32).collect();
        for r in 0..config.symmetric_relations as u32 {
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    if rng.random_bool(config.pair_prob) {
                        pairs.push(Triple::new(a, r, b));
                    }
                }
            }
        }
    }
    pairs.shuffle(&mut rng);
    let held = (2 * config.held_out).min(pairs.len());
    let mut held_out: Vec<Triple> = pairs[..held]
        .iter()
        .map(|&t| if rng.random_bool(0.5) { t } else { Triple::new(t.object, t.relation, t.subject) })
        .collect();

    let mut train = Vec::new();
    let removed: HashSet<Triple> = held_out.iter().copied().collect();
    for t in &pairs {
        for d in [*t, Triple::new(t.object, t.relation, t.subject)] {
            if !removed.contains(&d) {
                train.push(d);
            }
        }
    }
    let communities = config.communities.max(1);
    for r in config.symmetric_relations..n_rel {
        for e in 0..n {
            let next = (e / size.max(1) + 1) % communities;
            let o = next * size + rng.random_range(0..size.max(1));
            train.push(Triple::new(e as u32, r as u32, o as u32));
        }
    }
    let test = held_out.split_off(held / 2);
    Dataset::from_parts(Vocabulary::synthetic(n, n_rel), train, held_out, test)
}
