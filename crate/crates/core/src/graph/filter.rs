use std::collections::HashMap;

use super::{Dataset, EntityId, RelationId, Side, Triple};

/// Known completions of every `(s, r, ?)` and `(?, r, o)` query over all splits.
///
/// Lists are sorted and free of duplicates.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    sr_to_o: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    ro_to_s: HashMap<(RelationId, EntityId), Vec<EntityId>>,
}

impl FilterIndex {
    pub fn build(dataset: &Dataset) -> Self {
        Self::from_triples(dataset.all_triples().copied())
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut index = Self::default();
        for t in triples {
            index
                .sr_to_o
                .entry((t.subject, t.relation))
                .or_default()
                .push(t.object);
            index
                .ro_to_s
                .entry((t.relation, t.object))
                .or_default()
                .push(t.subject);
        }
        for v in index.sr_to_o.values_mut().chain(index.ro_to_s.values_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        index
    }

    pub fn objects(&self, subject: EntityId, relation: RelationId) -> &[EntityId] {
        self.sr_to_o
            .get(&(subject, relation))
            .map_or(&[], Vec::as_slice)
    }

    pub fn subjects(&self, relation: RelationId, object: EntityId) -> &[EntityId] {
        self.ro_to_s
            .get(&(relation, object))
            .map_or(&[], Vec::as_slice)
    }

    /// Entities that complete `t` on `side` to a known triple.
    pub fn known(&self, t: &Triple, side: Side) -> &[EntityId] {
        match side {
            Side::Object => self.objects(t.subject, t.relation),
            Side::Subject => self.subjects(t.relation, t.object),
        }
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.objects(t.subject, t.relation)
            .binary_search(&t.object)
            .is_ok()
    }

    /// Number of distinct triples indexed.
    pub fn len(&self) -> usize {
        self.sr_to_o.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sr_to_o.is_empty()
    }
}
