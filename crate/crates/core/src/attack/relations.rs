//! Algebraic selection of adversarial relations.
//!
//! For multiplicative models an inverse pair satisfies `e_r * e_ri ~ 1` and a
//! composition `e_r1 * e_r2 ~ e_r` (Hadamard products; complex for ComplEx).
//! For additive models the conditions are `e_r + e_ri ~ 0` and `e_r1 + e_r2 ~ e_r`.

use crate::graph::RelationId;
use crate::model::{l2_norm, sq_dist, Family, Model, ModelKind};

/// Relation `r_i != r` minimising the inversion criterion; ties go to the lowest id.
///
/// Multiplicative: `|<e_ri, e_r> - 1|` (ComplEx: real part of the unconjugated
/// complex dot product). Additive: `||e_ri + e_r||`.
/// Returns `None` when the model has a single relation.
pub fn find_inverse_relation(model: &Model, relation: RelationId) -> Option<(RelationId, f64)> {
    let r = model.relation(relation);
    let mut best: Option<(RelationId, f64)> = None;
    for cand in 0..model.n_relations() as RelationId {
        if cand == relation {
            continue;
        }
        let value = inversion_criterion(model, model.relation(cand), r);
        if best.is_none_or(|(_, b)| value < b) {
            best = Some((cand, value));
        }
    }
    best
}

pub fn inversion_criterion(model: &Model, candidate: &[f64], relation: &[f64]) -> f64 {
    match model.kind.family() {
        Family::Multiplicative => (complex_dot_re(model, candidate, relation) - 1.0).abs(),
        Family::Additive => {
            let sum: Vec<f64> = candidate.iter().zip(relation).map(|(a, b)| a + b).collect();
            l2_norm(&sum)
        }
    }
}

fn complex_dot_re(model: &Model, a: &[f64], b: &[f64]) -> f64 {
    match model.kind {
        ModelKind::ComplEx => {
            let k = model.dim;
            (0..k).map(|d| a[d] * b[d] - a[k + d] * b[k + d]).sum()
        }
        _ => a.iter().zip(b).map(|(x, y)| x * y).sum(),
    }
}

/// Composition of two relation embeddings in the model's algebra, as stored reals.
pub fn compose(model: &Model, r1: &[f64], r2: &[f64]) -> Vec<f64> {
    match model.kind {
        ModelKind::DistMult => r1.iter().zip(r2).map(|(a, b)| a * b).collect(),
        ModelKind::ComplEx => {
            let k = model.dim;
            let mut out = vec![0.0; 2 * k];
            for d in 0..k {
                out[d] = r1[d] * r2[d] - r1[k + d] * r2[k + d];
                out[k + d] = r1[d] * r2[k + d] + r1[k + d] * r2[d];
            }
            out
        }
        ModelKind::TransE => r1.iter().zip(r2).map(|(a, b)| a + b).collect(),
    }
}

/// Ordered pair `(r1, r2)` whose composition is closest (Euclidean) to `e_r`.
///
/// Self-pairs and pairs containing `relation` are considered unless
/// `exclude_target` is set. Ties go to the lexicographically smallest pair.
pub fn find_composition_pair(
    model: &Model,
    relation: RelationId,
    exclude_target: bool,
) -> Option<((RelationId, RelationId), f64)> {
    let target = model.relation(relation);
    let n = model.n_relations() as RelationId;
    let mut best: Option<((RelationId, RelationId), f64)> = None;
    for r1 in 0..n {
        for r2 in 0..n {
            if exclude_target && (r1 == relation || r2 == relation) {
                continue;
            }
            let composed = compose(model, model.relation(r1), model.relation(r2));
            let dist = sq_dist(&composed, target).sqrt();
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some(((r1, r2), dist));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EmbeddingTable;

    fn with_relations(kind: ModelKind, rels: &[&[f64]]) -> Model {
        let w = rels[0].len();
        Model::from_tables(
            kind,
            EmbeddingTable::zeros(1, w),
            EmbeddingTable::from_values(rels.len(), w, rels.concat()).unwrap(),
        )
    }

    #[test]
    fn multiplicative_inverse_by_unit_dot() {
        // r0 is the target; <r1, r0> = 0, <r2, r0> = 1
        let m = with_relations(ModelKind::DistMult, &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 5.0]]);
        assert_eq!(find_inverse_relation(&m, 0), Some((2, 0.0)));
    }

    #[test]
    fn additive_inverse_by_opposite() {
        let m = with_relations(ModelKind::TransE, &[&[1.0, 0.0], &[-1.0, 0.0], &[0.5, 0.5]]);
        assert_eq!(find_inverse_relation(&m, 0), Some((1, 0.0)));
    }

    #[test]
    fn single_relation_has_no_inverse() {
        let m = with_relations(ModelKind::TransE, &[&[1.0, 0.0]]);
        assert_eq!(find_inverse_relation(&m, 0), None);
    }

    #[test]
    fn inverse_ties_break_low() {
        let m = with_relations(ModelKind::DistMult, &[&[1.0], &[1.0], &[1.0]]);
        assert_eq!(find_inverse_relation(&m, 2).unwrap().0, 0);
    }

    #[test]
    fn planted_hadamard_factorisation() {
        // e_r1 = [1,1], e_r2 = [2,3], e_r = [2,3]
        let m = with_relations(ModelKind::DistMult, &[&[2.0, 3.0], &[1.0, 1.0], &[2.0, 3.0]]);
        let (pair, dist) = find_composition_pair(&m, 0, false).unwrap();
        assert_eq!(dist, 0.0);
        // r0 * r1 = [2,3] too, and (0, 1) is lexicographically first
        assert_eq!(pair, (0, 1));
        let (pair, _) = find_composition_pair(&m, 0, true).unwrap();
        assert_eq!(pair, (1, 2));
    }

    #[test]
    fn complex_composition_is_complex_product() {
        // i * i = -1
        let m = with_relations(ModelKind::ComplEx, &[&[-1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(compose(&m, m.relation(1), m.relation(1)), vec![-1.0, 0.0]);
        let (pair, dist) = find_composition_pair(&m, 0, true).unwrap();
        assert_eq!((pair, dist), ((1, 1), 0.0));
    }

    #[test]
    fn additive_sum_pair() {
        let m = with_relations(ModelKind::TransE, &[&[3.0, 1.0], &[1.0, 0.0], &[2.0, 1.0], &[9.0, 9.0]]);
        assert_eq!(find_composition_pair(&m, 0, true).unwrap(), ((1, 2), 0.0));
    }
}
