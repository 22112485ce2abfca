//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kge_poison::attack::logic::ground_score;
use kge_poison::graph::{Dataset, EntityId, RelationId, Side, Triple, Vocabulary};
use kge_poison::model::{EmbeddingTable, Model, ModelKind};
use kge_poison::train::sigmoid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with distinct triples split into train and test.
pub fn random_kg(rng: &mut ChaCha8Rng, n_e: usize, n_r: usize, n_train: usize, n_test: usize) -> Dataset {
    let mut seen = HashSet::new();
    let mut draw = |rng: &mut ChaCha8Rng| loop {
        let t = Triple::new(
            rng.random_range(0..n_e as u32),
            rng.random_range(0..n_r as u32),
            rng.random_range(0..n_e as u32),
        );
        if seen.insert(t) {
            return t;
        }
    };
    let train = (0..n_train).map(|_| draw(rng)).collect();
    let test = (0..n_test).map(|_| draw(rng)).collect();
    Dataset::from_parts(Vocabulary::synthetic(n_e, n_r), train, vec![], test).unwrap()
}

/// Model with entries uniform in `[-scale, scale]`, or drawn from {-1, 0, 1}
/// when `integer` is set (which produces many exact score ties).
pub fn random_model(rng: &mut ChaCha8Rng, kind: ModelKind, n_e: usize, n_r: usize, dim: usize, integer: bool) -> Model {
    let w = kind.storage_width(dim);
    let mut table = |rows: usize| {
        let values = (0..rows * w)
            .map(|_| {
                if integer {
                    rng.random_range(-1..=1) as f64
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        EmbeddingTable::from_values(rows, w, values).unwrap()
    };
    let entities = table(n_e);
    let relations = table(n_r);
    Model::from_tables(kind, entities, relations)
}

pub fn known_set(dataset: &Dataset) -> HashSet<Triple> {
    dataset.all_triples().copied().collect()
}

/// Filtered rank by materialising every candidate triple, scoring each one
/// individually, and sorting.
pub fn brute_rank(model: &Model, known: &HashSet<Triple>, t: &Triple, side: Side) -> usize {
    let truth = model.score(*t);
    let mut scored: Vec<(f64, bool)> = (0..model.n_entities() as EntityId)
        .map(|e| t.with_entity(side, e))
        .filter(|c| c == t || !known.contains(c))
        .map(|c| (model.score(c), c == *t))
        .collect();
    // descending by score; the true triple goes first among equal scores
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
    let pos = scored.iter().position(|x| x.1).unwrap();
    assert!(scored[pos].0 == truth);
    pos + 1
}

/// Valid decoy entities, computed from the raw split contents.
pub fn brute_candidates(known: &HashSet<Triple>, t: &Triple, side: Side, n_e: usize, symmetric: bool) -> Vec<EntityId> {
    (0..n_e as EntityId)
        .filter(|&e| e != t.entity(side))
        .filter(|&e| !known.contains(&t.with_entity(side, e)))
        .filter(|&e| !symmetric || e != t.entity(side.other()))
        .collect()
}

fn phi(model: &Model, t: Triple) -> f64 {
    sigmoid(model.score(t))
}

fn body_atom(t: &Triple, side: Side, e: EntityId, rel: RelationId) -> Triple {
    match side {
        Side::Object => Triple::new(e, rel, t.subject),
        Side::Subject => Triple::new(t.object, rel, e),
    }
}

/// Lexicographic argmin over `(value, id)`.
pub fn argmin(items: impl IntoIterator<Item = (f64, EntityId)>) -> Option<(f64, EntityId)> {
    items
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
}

/// Argmax over value, lowest id among ties.
pub fn argmax(items: impl IntoIterator<Item = (f64, EntityId)>) -> Option<(f64, EntityId)> {
    items
        .into_iter()
        .min_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)))
}

/// Soft-truth decoy for symmetry (`body_rel = r`) or inversion (`body_rel = ri`).
pub fn oracle_truth_single(model: &Model, t: &Triple, side: Side, body_rel: RelationId, cands: &[EntityId]) -> Option<(f64, EntityId)> {
    argmin(cands.iter().map(|&e| {
        let b = phi(model, body_atom(t, side, e, body_rel));
        let h = phi(model, t.with_entity(side, e));
        (ground_score(&[b], h).value(), e)
    }))
}

/// Soft-truth composition decoy scanning every entity as the intermediate.
pub fn oracle_truth_com(model: &Model, t: &Triple, side: Side, r1: RelationId, r2: RelationId, cands: &[EntityId]) -> Option<(f64, EntityId)> {
    let n = model.n_entities() as EntityId;
    argmin(cands.iter().flat_map(|&e| {
        let h = phi(model, t.with_entity(side, e));
        (0..n).map(move |mid| {
            let (a, b) = match side {
                Side::Object => (Triple::new(t.subject, r1, mid), Triple::new(mid, r2, e)),
                Side::Subject => (Triple::new(e, r1, mid), Triple::new(mid, r2, t.object)),
            };
            (ground_score(&[phi(model, a), phi(model, b)], h).value(), e)
        })
    }))
}

/// Decoy by full sort: the candidate at the target's rank position.
pub fn oracle_rank(model: &Model, t: &Triple, side: Side, cands: &[EntityId]) -> Option<EntityId> {
    let truth = model.score(*t);
    let mut sorted: Vec<(f64, EntityId)> = cands.iter().map(|&e| (model.score(t.with_entity(side, e)), e)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let rank = 1 + sorted.iter().filter(|x| x.0 > truth).count();
    sorted.get(rank - 1).map(|x| x.1)
}

pub fn oracle_cos(model: &Model, t: &Triple, side: Side, cands: &[EntityId]) -> Option<(f64, EntityId)> {
    let a = model.entity(t.entity(side));
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    argmax(cands.iter().map(|&e| {
        let b = model.entity(e);
        let cos = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (norm(a) * norm(b));
        (1.0 - cos, e)
    }))
}

/// Intermediate entity for a composition edit; `literal` maximises the grounding,
/// otherwise the body conjunction.
pub fn oracle_step3(
    model: &Model,
    t: &Triple,
    side: Side,
    decoy: EntityId,
    r1: RelationId,
    r2: RelationId,
    literal: bool,
    train: &HashSet<Triple>,
) -> Option<EntityId> {
    let n = model.n_entities() as EntityId;
    let h = phi(model, t.with_entity(side, decoy));
    argmax((0..n).filter_map(|mid| {
        if mid == t.subject || mid == t.object || mid == decoy {
            return None;
        }
        let (a, b) = match side {
            Side::Object => (Triple::new(t.subject, r1, mid), Triple::new(mid, r2, decoy)),
            Side::Subject => (Triple::new(decoy, r1, mid), Triple::new(mid, r2, t.object)),
        };
        if train.contains(&a) || train.contains(&b) {
            return None;
        }
        let (b1, b2) = (phi(model, a), phi(model, b));
        let v = if literal { ground_score(&[b1, b2], h).value() } else { b1 * b2 };
        Some((v, mid))
    }))
    .map(|x| x.1)
}

/// Composition in each model's algebra, written out independently.
pub fn compose_oracle(kind: ModelKind, a: &[f64], b: &[f64]) -> Vec<f64> {
    match kind {
        ModelKind::DistMult => a.iter().zip(b).map(|(x, y)| x * y).collect(),
        ModelKind::TransE => a.iter().zip(b).map(|(x, y)| x + y).collect(),
        ModelKind::ComplEx => {
            let k = a.len() / 2;
            let (re, im): (Vec<f64>, Vec<f64>) = (0..k)
                .map(|d| {
                    let (ar, ai, br, bi) = (a[d], a[k + d], b[d], b[k + d]);
                    (ar * br - ai * bi, ar * bi + ai * br)
                })
                .unzip();
            [re, im].concat()
        }
    }
}

pub fn oracle_composition_pair(model: &Model, r: RelationId) -> ((RelationId, RelationId), f64) {
    let n = model.n_relations() as RelationId;
    let target = model.relation(r);
    let mut best = ((0, 0), f64::INFINITY);
    for a in 0..n {
        for b in 0..n {
            let c = compose_oracle(model.kind, model.relation(a), model.relation(b));
            let d = c.iter().zip(target).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if d < best.1 {
                best = ((a, b), d);
            }
        }
    }
    best
}

/// Largest relative error between analytic score gradients and central
/// differences with step `h`, over all three embeddings.
pub fn gradient_error(model: &Model, s: &[f64], r: &[f64], o: &[f64], h: f64) -> f64 {
    let g = model.grad_embeddings(s, r, o);
    let mut worst: f64 = 0.0;
    let mut check = |which: usize, analytic: &[f64]| {
        for d in 0..analytic.len() {
            let mut v = [s.to_vec(), r.to_vec(), o.to_vec()];
            v[which][d] += h;
            let plus = model.score_embeddings(&v[0], &v[1], &v[2]);
            v[which][d] -= 2.0 * h;
            let minus = model.score_embeddings(&v[0], &v[1], &v[2]);
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[d];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    };
    check(0, &g.subject);
    check(1, &g.relation);
    check(2, &g.object);
    worst
}
