//! Decoy entity heuristics and the composition adversarial-entity search.
//!
//! Groundings are written for the object side; the subject side mirrors them:
//!
//! | pattern | object side (decoy `(s, r, o')`)          | subject side (decoy `(s', r, o)`)         |
//! |---------|-------------------------------------------|-------------------------------------------|
//! | sym     | `(o', r, s) => (s, r, o')`                | `(o, r, s') => (s', r, o)`                |
//! | inv     | `(o', ri, s) => (s, r, o')`               | `(o, ri, s') => (s', r, o)`               |
//! | com     | `(s, r1, o'') & (o'', r2, o') => (s, r, o')` | `(s', r1, o'') & (o'', r2, o) => (s', r, o)` |
//!
//! Every argmin/argmax breaks ties toward the lowest entity id.

use std::collections::HashSet;

use super::kmeans::EntityClusters;
use super::logic::ground_score;
use crate::graph::{EntityId, FilterIndex, RelationId, Side, Triple};
use crate::model::{l2_norm, Model, Scorer};
use crate::train::sigmoid;

/// Relations a pattern needs, fixed before decoy search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternRelations {
    Symmetry,
    Inversion(RelationId),
    Composition(RelationId, RelationId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyChoice {
    pub target: Triple,
    pub side: Side,
    pub entity: EntityId,
    /// Grounding score, model score or cosine distance, depending on the heuristic.
    pub score: f64,
}

impl DecoyChoice {
    pub fn decoy_triple(&self) -> Triple {
        self.target.with_entity(self.side, self.entity)
    }
}

/// Entities `e` such that replacing the `side` entity of `target` by `e` gives a
/// triple absent from every split; the replaced entity itself is excluded.
pub fn decoy_candidates(target: &Triple, side: Side, filter: &FilterIndex, n_entities: usize) -> Vec<EntityId> {
    let known = filter.known(target, side);
    let truth = target.entity(side);
    (0..n_entities as EntityId)
        .filter(|&e| e != truth && known.binary_search(&e).is_err())
        .collect()
}

/// Candidates minus entities whose edits would reproduce the decoy triple itself.
///
/// Only symmetry can do that: with `o' = s` the edit `(o', r, s)` is the decoy
/// `(s, r, s)` (mirrored on the subject side).
pub fn attack_candidates(
    target: &Triple,
    side: Side,
    relations: PatternRelations,
    filter: &FilterIndex,
    n_entities: usize,
) -> Vec<EntityId> {
    let mut c = decoy_candidates(target, side, filter, n_entities);
    if relations == PatternRelations::Symmetry {
        let fixed = target.entity(side.other());
        c.retain(|&e| e != fixed);
    }
    c
}

fn phi<S: Scorer + ?Sized>(scorer: &S, t: Triple) -> f64 {
    sigmoid(scorer.score(t))
}

/// Body atom of the symmetry/inversion grounding whose head is the decoy.
pub fn single_body_atom(target: &Triple, side: Side, decoy: EntityId, body_relation: RelationId) -> Triple {
    match side {
        Side::Object => Triple::new(decoy, body_relation, target.subject),
        Side::Subject => Triple::new(target.object, body_relation, decoy),
    }
}

/// The two body atoms of the composition grounding, given intermediate `mid`.
pub fn composition_body(target: &Triple, side: Side, decoy: EntityId, pair: (RelationId, RelationId), mid: EntityId) -> [Triple; 2] {
    let (r1, r2) = pair;
    match side {
        Side::Object => [Triple::new(target.subject, r1, mid), Triple::new(mid, r2, decoy)],
        Side::Subject => [Triple::new(decoy, r1, mid), Triple::new(mid, r2, target.object)],
    }
}

/// Soft-truth decoy: the candidate whose grounding is least satisfied.
///
/// Composition groundings are searched greedily over `clusters`: each centroid
/// acts as a virtual intermediate entity, the best decoy is found per cluster,
/// and the minimum across clusters wins.
pub fn select_decoy_truth<S: Scorer + ?Sized>(
    scorer: &S,
    target: &Triple,
    side: Side,
    relations: PatternRelations,
    candidates: &[EntityId],
    clusters: Option<&EntityClusters>,
) -> Option<DecoyChoice> {
    if candidates.is_empty() {
        return None;
    }
    let mut best: Option<(f64, EntityId)> = None;
    let mut consider = |value: f64, e: EntityId| {
        if best.is_none_or(|(b, be)| value < b || (value == b && e < be)) {
            best = Some((value, e));
        }
    };
    match relations {
        PatternRelations::Symmetry | PatternRelations::Inversion(_) => {
            let body_rel = match relations {
                PatternRelations::Inversion(ri) => ri,
                _ => target.relation,
            };
            for &e in candidates {
                let body = phi(scorer, single_body_atom(target, side, e, body_rel));
                let head = phi(scorer, target.with_entity(side, e));
                consider(ground_score(&[body], head).value(), e);
            }
        }
        PatternRelations::Composition(r1, r2) => {
            let clusters = clusters.expect("composition soft-truth needs entity clusters");
            let model = scorer.model();
            let heads: Vec<f64> = candidates
                .iter()
                .map(|&e| phi(scorer, target.with_entity(side, e)))
                .collect();
            let (e_r1, e_r2) = (model.relation(r1), model.relation(r2));
            for centroid in &clusters.centroids {
                let mut local: Option<(f64, EntityId)> = None;
                match side {
                    Side::Object => {
                        let b1 = sigmoid(scorer.score_embeddings(model.entity(target.subject), e_r1, centroid));
                        for (&e, &h) in candidates.iter().zip(&heads) {
                            let b2 = sigmoid(scorer.score_embeddings(centroid, e_r2, model.entity(e)));
                            let g = ground_score(&[b1, b2], h).value();
                            if local.is_none_or(|(b, _)| g < b) {
                                local = Some((g, e));
                            }
                        }
                    }
                    Side::Subject => {
                        let b2 = sigmoid(scorer.score_embeddings(centroid, e_r2, model.entity(target.object)));
                        for (&e, &h) in candidates.iter().zip(&heads) {
                            let b1 = sigmoid(scorer.score_embeddings(model.entity(e), e_r1, centroid));
                            let g = ground_score(&[b1, b2], h).value();
                            if local.is_none_or(|(b, _)| g < b) {
                                local = Some((g, e));
                            }
                        }
                    }
                }
                if let Some((g, e)) = local {
                    consider(g, e);
                }
            }
        }
    }
    best.map(|(score, entity)| DecoyChoice {
        target: *target,
        side,
        entity,
        score,
    })
}

/// Rank decoy: the candidate ranked immediately below the target.
///
/// Candidates are ordered by model score (descending, ties by id). The target's
/// rank among them is `1 + |{scores > target}|`, and the decoy is the candidate
/// at that rank position, i.e. the best-scored candidate not above the target.
pub fn select_decoy_rank<S: Scorer + ?Sized>(
    scorer: &S,
    target: &Triple,
    side: Side,
    candidates: &[EntityId],
) -> Option<DecoyChoice> {
    if candidates.is_empty() {
        return None;
    }
    let scores = scorer.score_all(target, side);
    let truth = scores[target.entity(side) as usize];
    let mut best: Option<(f64, EntityId)> = None;
    for &e in candidates {
        let s = scores[e as usize];
        if s <= truth && best.is_none_or(|(b, _)| s > b) {
            best = Some((s, e));
        }
    }
    best.map(|(score, entity)| DecoyChoice {
        target: *target,
        side,
        entity,
        score,
    })
}

/// Filtered rank of the target among `candidates` (plus itself).
pub fn rank_among(scores: &[f64], truth: EntityId, candidates: &[EntityId]) -> usize {
    let t = scores[truth as usize];
    1 + candidates.iter().filter(|&&e| scores[e as usize] > t).count()
}

/// Cosine distance `1 - cos(a, b)`; a zero vector counts as orthogonal.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        log::warn!("zero-norm embedding in cosine distance");
        return 1.0;
    }
    1.0 - crate::model::dot(a, b) / (na * nb)
}

/// Cosine decoy: the candidate farthest (in cosine distance) from the replaced entity.
pub fn select_decoy_cos(model: &Model, target: &Triple, side: Side, candidates: &[EntityId]) -> Option<DecoyChoice> {
    let anchor = model.entity(target.entity(side));
    let mut best: Option<(f64, EntityId)> = None;
    for &e in candidates {
        let d = cosine_distance(model.entity(e), anchor);
        if best.is_none_or(|(b, _)| d > b) {
            best = Some((d, e));
        }
    }
    best.map(|(score, entity)| DecoyChoice {
        target: *target,
        side,
        entity,
        score,
    })
}

/// How the composition intermediate entity is chosen once the decoy is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Step3Mode {
    /// Maximise the grounding score `B * h - B + 1`.
    #[default]
    Literal,
    /// Maximise the body conjunction `B = b1 * b2`.
    Body,
}

/// Intermediate entity `o''` for a composition edit.
///
/// `o''` never equals the target's subject, object or the decoy entity, and any
/// `o''` that would make a body triple an existing training triple is skipped.
pub fn select_adversarial_entity_com<S: Scorer + ?Sized>(
    scorer: &S,
    decoy: &DecoyChoice,
    pair: (RelationId, RelationId),
    mode: Step3Mode,
    train: &HashSet<Triple>,
) -> Option<EntityId> {
    let target = &decoy.target;
    let n = scorer.model().n_entities() as EntityId;
    let h = phi(scorer, decoy.decoy_triple());
    let mut best: Option<(f64, EntityId)> = None;
    for mid in 0..n {
        if mid == target.subject || mid == target.object || mid == decoy.entity {
            continue;
        }
        let body = composition_body(target, decoy.side, decoy.entity, pair, mid);
        if body.iter().any(|t| train.contains(t)) {
            continue;
        }
        let b1 = phi(scorer, body[0]);
        let b2 = phi(scorer, body[1]);
        let value = match mode {
            Step3Mode::Literal => ground_score(&[b1, b2], h).value(),
            Step3Mode::Body => b1 * b2,
        };
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, mid));
        }
    }
    best.map(|(_, e)| e)
}
