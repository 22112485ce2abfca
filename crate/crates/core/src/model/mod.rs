//! DistMult, ComplEx and TransE scoring.
//!
//! Every model keeps one entity table and one relation table of `f64` rows.
//! ComplEx rows are stored as `2k` reals: the first `k` entries are the real parts
//! and the last `k` the imaginary parts. TransE scores are shifted by the margin,
//! `margin - ||s + r - o||`, so they can be fed to a logistic loss; the shift does
//! not change any ranking.

mod checkpoint;
mod scorer;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use scorer::{CountingScorer, Scorer};

use crate::error::Error;
use crate::graph::{EntityId, RelationId, Side, Triple};

pub const DEFAULT_MARGIN: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    DistMult,
    ComplEx,
    TransE,
}

/// How a model combines subject, relation and object embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Multiplicative,
    Additive,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::DistMult, ModelKind::ComplEx, ModelKind::TransE];

    pub fn family(self) -> Family {
        match self {
            ModelKind::DistMult | ModelKind::ComplEx => Family::Multiplicative,
            ModelKind::TransE => Family::Additive,
        }
    }

    /// Number of stored reals per row for an embedding of dimension `dim`.
    pub fn storage_width(self, dim: usize) -> usize {
        match self {
            ModelKind::ComplEx => 2 * dim,
            _ => dim,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DistMult => "distmult",
            ModelKind::ComplEx => "complex",
            ModelKind::TransE => "transe",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "distmult" => Ok(ModelKind::DistMult),
            "complex" => Ok(ModelKind::ComplEx),
            "transe" => Ok(ModelKind::TransE),
            other => Err(Error::Config(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Dense row-major matrix of embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Option<Self> {
        (values.len() == rows * cols).then_some(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Gradients of one triple score with respect to its three embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub subject: Vec<f64>,
    pub relation: Vec<f64>,
    pub object: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub dim: usize,
    pub margin: f64,
    pub seed: u64,
    pub entities: EmbeddingTable,
    pub relations: EmbeddingTable,
}

impl Model {
    /// Uniform initialisation on `[-1/sqrt(dim), 1/sqrt(dim)]`, deterministic in `seed`.
    pub fn init(kind: ModelKind, n_entities: usize, n_relations: usize, dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "embedding dimension must be at least 1");
        let width = kind.storage_width(dim);
        let bound = init_bound(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = |rows: usize| {
            let values = (0..rows * width)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            EmbeddingTable {
                rows,
                cols: width,
                values,
            }
        };
        let entities = table(n_entities);
        let relations = table(n_relations);
        Self {
            kind,
            dim,
            margin: DEFAULT_MARGIN,
            seed,
            entities,
            relations,
        }
    }

    /// Model with explicit tables; `dim` is inferred from the entity table width.
    pub fn from_tables(kind: ModelKind, entities: EmbeddingTable, relations: EmbeddingTable) -> Self {
        assert_eq!(entities.cols, relations.cols, "entity/relation widths differ");
        let dim = match kind {
            ModelKind::ComplEx => entities.cols / 2,
            _ => entities.cols,
        };
        Self {
            kind,
            dim,
            margin: DEFAULT_MARGIN,
            seed: 0,
            entities,
            relations,
        }
    }

    pub fn n_entities(&self) -> usize {
        self.entities.rows
    }

    pub fn n_relations(&self) -> usize {
        self.relations.rows
    }

    pub fn entity(&self, id: EntityId) -> &[f64] {
        self.entities.row(id as usize)
    }

    pub fn relation(&self, id: RelationId) -> &[f64] {
        self.relations.row(id as usize)
    }

    pub fn score(&self, t: Triple) -> f64 {
        self.score_embeddings(self.entity(t.subject), self.relation(t.relation), self.entity(t.object))
    }

    /// Scores raw embedding vectors, which need not be rows of this model.
    pub fn score_embeddings(&self, s: &[f64], r: &[f64], o: &[f64]) -> f64 {
        match self.kind {
            ModelKind::DistMult => s
                .iter()
                .zip(r)
                .zip(o)
                .map(|((s, r), o)| s * r * o)
                .sum(),
            ModelKind::ComplEx => {
                let k = self.dim;
                let (sa, sb) = s.split_at(k);
                let (ra, rb) = r.split_at(k);
                let (oa, ob) = o.split_at(k);
                (0..k)
                    .map(|d| {
                        (sa[d] * ra[d] - sb[d] * rb[d]) * oa[d]
                            + (sa[d] * rb[d] + sb[d] * ra[d]) * ob[d]
                    })
                    .sum()
            }
            ModelKind::TransE => {
                let sq: f64 = s
                    .iter()
                    .zip(r)
                    .zip(o)
                    .map(|((s, r), o)| {
                        let d = s + r - o;
                        d * d
                    })
                    .sum();
                self.margin - sq.sqrt()
            }
        }
    }

    /// `out[i] = score(s, r, i)`.
    pub fn score_all_objects(&self, subject: EntityId, relation: RelationId) -> Vec<f64> {
        let s = self.entity(subject);
        let r = self.relation(relation);
        self.entities
            .iter_rows()
            .map(|o| self.score_embeddings(s, r, o))
            .collect()
    }

    /// `out[i] = score(i, r, o)`.
    pub fn score_all_subjects(&self, relation: RelationId, object: EntityId) -> Vec<f64> {
        let r = self.relation(relation);
        let o = self.entity(object);
        self.entities
            .iter_rows()
            .map(|s| self.score_embeddings(s, r, o))
            .collect()
    }

    /// Scores of every completion of `t` on `side`.
    pub fn score_all(&self, t: &Triple, side: Side) -> Vec<f64> {
        match side {
            Side::Object => self.score_all_objects(t.subject, t.relation),
            Side::Subject => self.score_all_subjects(t.relation, t.object),
        }
    }

    pub fn grad_score(&self, t: Triple) -> TripleGrad {
        self.grad_embeddings(self.entity(t.subject), self.relation(t.relation), self.entity(t.object))
    }

    /// Analytic gradient of [`Model::score_embeddings`]. TransE at zero distance
    /// returns zero vectors.
    pub fn grad_embeddings(&self, s: &[f64], r: &[f64], o: &[f64]) -> TripleGrad {
        let w = s.len();
        let mut g = TripleGrad {
            subject: vec![0.0; w],
            relation: vec![0.0; w],
            object: vec![0.0; w],
        };
        match self.kind {
            ModelKind::DistMult => {
                for d in 0..w {
                    g.subject[d] = r[d] * o[d];
                    g.relation[d] = s[d] * o[d];
                    g.object[d] = s[d] * r[d];
                }
            }
            ModelKind::ComplEx => {
                let k = self.dim;
                for d in 0..k {
                    let (sa, sb) = (s[d], s[k + d]);
                    let (ra, rb) = (r[d], r[k + d]);
                    let (oa, ob) = (o[d], o[k + d]);
                    g.subject[d] = ra * oa + rb * ob;
                    g.subject[k + d] = ra * ob - rb * oa;
                    g.relation[d] = sa * oa + sb * ob;
                    g.relation[k + d] = sa * ob - sb * oa;
                    g.object[d] = sa * ra - sb * rb;
                    g.object[k + d] = sa * rb + sb * ra;
                }
            }
            ModelKind::TransE => {
                let diff: Vec<f64> = (0..w).map(|d| s[d] + r[d] - o[d]).collect();
                let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for d in 0..w {
                        let u = diff[d] / norm;
                        g.subject[d] = -u;
                        g.relation[d] = -u;
                        g.object[d] = u;
                    }
                }
            }
        }
        g
    }

    /// Query vector for a 1-K batch row: scoring every candidate `e` on `side`
    /// reduces to [`Model::logit_from_query`]`(q, e)`.
    pub(crate) fn query(&self, side: Side, key_entity: &[f64], relation: &[f64]) -> Vec<f64> {
        let w = key_entity.len();
        match (self.kind, side) {
            (ModelKind::DistMult, _) => (0..w).map(|d| key_entity[d] * relation[d]).collect(),
            (ModelKind::ComplEx, Side::Object) => {
                let k = self.dim;
                let mut q = vec![0.0; w];
                for d in 0..k {
                    let (sa, sb) = (key_entity[d], key_entity[k + d]);
                    let (ra, rb) = (relation[d], relation[k + d]);
                    q[d] = sa * ra - sb * rb;
                    q[k + d] = sa * rb + sb * ra;
                }
                q
            }
            (ModelKind::ComplEx, Side::Subject) => {
                // Re(e * r * conj(o)) = e_re * b_re - e_im * b_im with b = r * conj(o)
                let k = self.dim;
                let mut q = vec![0.0; w];
                for d in 0..k {
                    let (oa, ob) = (key_entity[d], key_entity[k + d]);
                    let (ra, rb) = (relation[d], relation[k + d]);
                    q[d] = ra * oa + rb * ob;
                    q[k + d] = -(rb * oa - ra * ob);
                }
                q
            }
            (ModelKind::TransE, Side::Object) => (0..w).map(|d| key_entity[d] + relation[d]).collect(),
            (ModelKind::TransE, Side::Subject) => (0..w).map(|d| key_entity[d] - relation[d]).collect(),
        }
    }

    #[inline]
    pub(crate) fn logit_from_query(&self, q: &[f64], e: &[f64]) -> f64 {
        match self.kind {
            ModelKind::DistMult | ModelKind::ComplEx => dot(q, e),
            ModelKind::TransE => self.margin - sq_dist(q, e).sqrt(),
        }
    }

    /// Accumulates `g * dlogit/dq` into `grad_q` and `g * dlogit/de` into `grad_e`.
    #[inline]
    pub(crate) fn backprop_logit(&self, q: &[f64], e: &[f64], g: f64, grad_q: &mut [f64], grad_e: &mut [f64]) {
        match self.kind {
            ModelKind::DistMult | ModelKind::ComplEx => {
                for d in 0..q.len() {
                    grad_q[d] += g * e[d];
                    grad_e[d] += g * q[d];
                }
            }
            ModelKind::TransE => {
                let n = sq_dist(q, e).sqrt();
                if n > 0.0 {
                    let c = g / n;
                    for d in 0..q.len() {
                        let u = c * (q[d] - e[d]);
                        grad_q[d] -= u;
                        grad_e[d] += u;
                    }
                }
            }
        }
    }

    /// Chains a query gradient back to the key entity and relation rows.
    pub(crate) fn backprop_query(
        &self,
        side: Side,
        key_entity: &[f64],
        relation: &[f64],
        grad_q: &[f64],
        grad_key: &mut [f64],
        grad_rel: &mut [f64],
    ) {
        let w = key_entity.len();
        match (self.kind, side) {
            (ModelKind::DistMult, _) => {
                for d in 0..w {
                    grad_key[d] += grad_q[d] * relation[d];
                    grad_rel[d] += grad_q[d] * key_entity[d];
                }
            }
            (ModelKind::ComplEx, Side::Object) => {
                let k = self.dim;
                for d in 0..k {
                    let (sa, sb) = (key_entity[d], key_entity[k + d]);
                    let (ra, rb) = (relation[d], relation[k + d]);
                    let (ga, gb) = (grad_q[d], grad_q[k + d]);
                    grad_key[d] += ga * ra + gb * rb;
                    grad_key[k + d] += -ga * rb + gb * ra;
                    grad_rel[d] += ga * sa + gb * sb;
                    grad_rel[k + d] += -ga * sb + gb * sa;
                }
            }
            (ModelKind::ComplEx, Side::Subject) => {
                let k = self.dim;
                for d in 0..k {
                    let (oa, ob) = (key_entity[d], key_entity[k + d]);
                    let (ra, rb) = (relation[d], relation[k + d]);
                    let g_re = grad_q[d];
                    let g_im = -grad_q[k + d];
                    grad_rel[d] += g_re * oa - g_im * ob;
                    grad_rel[k + d] += g_re * ob + g_im * oa;
                    grad_key[d] += g_re * ra + g_im * rb;
                    grad_key[k + d] += g_re * rb - g_im * ra;
                }
            }
            (ModelKind::TransE, Side::Object) => {
                for d in 0..w {
                    grad_key[d] += grad_q[d];
                    grad_rel[d] += grad_q[d];
                }
            }
            (ModelKind::TransE, Side::Subject) => {
                for d in 0..w {
                    grad_key[d] += grad_q[d];
                    grad_rel[d] -= grad_q[d];
                }
            }
        }
    }
}

pub fn init_bound(dim: usize) -> f64 {
    1.0 / (dim as f64).sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
