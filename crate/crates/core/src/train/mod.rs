//! 1-K training with binary cross-entropy on logits.
//!
//! Training triples are grouped by `(s, r)` with a multi-hot label vector over all
//! candidate objects, and by `(r, o)` with labels over all candidate subjects.
//! Each epoch shuffles both groupings with the run seed, cuts them into batches
//! and alternates one batch of each kind per update.

mod optim;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub use optim::{Gradients, OptimizerKind};

use crate::config::parse_value;
use crate::error::{Error, IoContext, Result};
use crate::graph::{Dataset, EntityId, RelationId, Side};
use crate::model::{Model, ModelKind, DEFAULT_MARGIN};
use optim::Optimizer;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub label_smoothing: f64,
    /// Weight of the mean squared row norm penalty; only used for TransE.
    pub l2: f64,
    pub input_dropout: f64,
    pub margin: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            epochs: 200,
            batch_size: 128,
            learning_rate: 1e-3,
            label_smoothing: 0.0,
            l2: 0.0,
            input_dropout: 0.0,
            margin: DEFAULT_MARGIN,
            seed: 0,
            optimizer: OptimizerKind::default(),
        }
    }
}

impl TrainConfig {
    /// Benchmark-scale settings (embedding size 200).
    pub fn benchmark() -> Self {
        Self {
            dim: 200,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return bad("label_smoothing must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return bad("input_dropout must lie in [0, 1)");
        }
        if self.l2 < 0.0 || !(self.learning_rate > 0.0) || !(self.margin > 0.0) {
            return bad("l2 must be >= 0, learning_rate and margin > 0");
        }
        Ok(())
    }

    /// Canonical `key=value` rendering; also the input of [`TrainConfig::hash`].
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("dim", self.dim.to_string());
        put("epochs", self.epochs.to_string());
        put("batch_size", self.batch_size.to_string());
        put("learning_rate", self.learning_rate.to_string());
        put("label_smoothing", self.label_smoothing.to_string());
        put("l2", self.l2.to_string());
        put("input_dropout", self.input_dropout.to_string());
        put("margin", self.margin.to_string());
        put("seed", self.seed.to_string());
        match self.optimizer {
            OptimizerKind::Sgd => put("optimizer", "sgd".into()),
            OptimizerKind::Adam { beta1, beta2, eps } => {
                put("optimizer", "adam".into());
                put("beta1", beta1.to_string());
                put("beta2", beta2.to_string());
                put("eps", eps.to_string());
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_kv().as_bytes()))
    }

    /// Applies one key; returns `Ok(false)` for keys this config does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let adam = |o: OptimizerKind| match o {
            OptimizerKind::Adam { beta1, beta2, eps } => (beta1, beta2, eps),
            OptimizerKind::Sgd => (0.9, 0.999, 1e-8),
        };
        match key {
            "dim" => self.dim = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" | "lr" => self.learning_rate = parse_value(key, value)?,
            "label_smoothing" => self.label_smoothing = parse_value(key, value)?,
            "l2" => self.l2 = parse_value(key, value)?,
            "input_dropout" => self.input_dropout = parse_value(key, value)?,
            "margin" => self.margin = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "optimizer" => {
                self.optimizer = match value {
                    "sgd" => OptimizerKind::Sgd,
                    "adam" => {
                        let (beta1, beta2, eps) = adam(self.optimizer);
                        OptimizerKind::Adam { beta1, beta2, eps }
                    }
                    other => return Err(Error::Config(format!("unknown optimizer '{other}'"))),
                }
            }
            "beta1" | "beta2" | "eps" => {
                let (mut beta1, mut beta2, mut eps) = adam(self.optimizer);
                let v: f64 = parse_value(key, value)?;
                match key {
                    "beta1" => beta1 = v,
                    "beta2" => beta2 = v,
                    _ => eps = v,
                }
                self.optimizer = OptimizerKind::Adam { beta1, beta2, eps };
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in map {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    /// Cumulative wall-clock seconds at the end of each epoch.
    pub epoch_seconds: Vec<f64>,
    pub seconds: f64,
    pub config_hash: String,
}

impl TrainReport {
    /// TSV with columns `epoch`, `loss`, `seconds`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\tloss\tseconds\n");
        for (i, (l, s)) in self.epoch_losses.iter().zip(&self.epoch_seconds).enumerate() {
            let _ = writeln!(out, "{}\t{l}\t{s:.3}", i + 1);
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).at(path)
    }
}

/// One 1-K training row: a key (entity, relation) on `side` and every entity
/// that completes it in the training split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyGroup {
    /// The side whose entities are being predicted.
    pub side: Side,
    pub entity: EntityId,
    pub relation: RelationId,
    pub targets: Vec<EntityId>,
}

/// Groups training triples into object-side `(s, r)` and subject-side `(r, o)` rows.
pub fn build_key_groups(dataset: &Dataset) -> (Vec<KeyGroup>, Vec<KeyGroup>) {
    let mut by_sr: BTreeMap<(EntityId, RelationId), Vec<EntityId>> = BTreeMap::new();
    let mut by_ro: BTreeMap<(RelationId, EntityId), Vec<EntityId>> = BTreeMap::new();
    for t in &dataset.train {
        by_sr.entry((t.subject, t.relation)).or_default().push(t.object);
        by_ro.entry((t.relation, t.object)).or_default().push(t.subject);
    }
    let finish = |mut v: Vec<EntityId>| {
        v.sort_unstable();
        v.dedup();
        v
    };
    let objects = by_sr
        .into_iter()
        .map(|((s, r), v)| KeyGroup {
            side: Side::Object,
            entity: s,
            relation: r,
            targets: finish(v),
        })
        .collect();
    let subjects = by_ro
        .into_iter()
        .map(|((r, o), v)| KeyGroup {
            side: Side::Subject,
            entity: o,
            relation: r,
            targets: finish(v),
        })
        .collect();
    (objects, subjects)
}

/// Multi-hot labels smoothed as `y * (1 - ls) + ls / n`.
pub fn label_vector(group: &KeyGroup, n_entities: usize, label_smoothing: f64) -> Vec<f64> {
    let neg = label_smoothing / n_entities as f64;
    let pos = (1.0 - label_smoothing) + neg;
    let mut y = vec![neg; n_entities];
    for &t in &group.targets {
        y[t as usize] = pos;
    }
    y
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `BCE(sigmoid(x), y)`.
pub fn bce_with_logits(x: f64, y: f64) -> f64 {
    x.max(0.0) - x * y + (-x.abs()).exp().ln_1p()
}

/// Derivative of [`bce_with_logits`] with respect to the logit.
pub fn bce_grad(x: f64, y: f64) -> f64 {
    sigmoid(x) - y
}

/// Per-batch coordinate masks for input dropout, keyed by batch row.
#[derive(Debug, Clone, Default)]
pub struct DropoutMasks {
    pub entity: Vec<Vec<f64>>,
    pub relation: Vec<Vec<f64>>,
}

/// Mean BCE over `batch x entities` and its gradient.
///
/// All groups in `batch` share one side. For TransE, `l2 * mean_row(||row||^2)`
/// over both tables is added. `masks`, when given, scale the key embeddings of
/// each row coordinate-wise before scoring.
pub fn loss_and_grads(
    model: &Model,
    batch: &[&KeyGroup],
    label_smoothing: f64,
    l2: f64,
    masks: Option<&DropoutMasks>,
    grads: &mut Gradients,
) -> f64 {
    grads.clear();
    let n = model.n_entities();
    let w = model.entities.cols();
    let scale = 1.0 / (batch.len() * n) as f64;
    let neg = label_smoothing / n as f64;
    let pos = (1.0 - label_smoothing) + neg;

    let mut loss = 0.0;
    let mut key = vec![0.0; w];
    let mut rel = vec![0.0; w];
    let mut grad_q = vec![0.0; w];
    let mut grad_key = vec![0.0; w];
    let mut grad_rel = vec![0.0; w];
    let mut labels = vec![neg; n];

    for (row, group) in batch.iter().enumerate() {
        key.copy_from_slice(model.entity(group.entity));
        rel.copy_from_slice(model.relation(group.relation));
        if let Some(m) = masks {
            mul_assign(&mut key, &m.entity[row]);
            mul_assign(&mut rel, &m.relation[row]);
        }
        let q = model.query(group.side, &key, &rel);
        for &t in &group.targets {
            labels[t as usize] = pos;
        }
        grad_q.fill(0.0);
        for (i, e) in model.entities.iter_rows().enumerate() {
            let x = model.logit_from_query(&q, e);
            let y = labels[i];
            loss += bce_with_logits(x, y);
            let g = bce_grad(x, y) * scale;
            model.backprop_logit(&q, e, g, &mut grad_q, &mut grads.entities[i * w..(i + 1) * w]);
        }
        for &t in &group.targets {
            labels[t as usize] = neg;
        }

        grad_key.fill(0.0);
        grad_rel.fill(0.0);
        model.backprop_query(group.side, &key, &rel, &grad_q, &mut grad_key, &mut grad_rel);
        if let Some(m) = masks {
            mul_assign(&mut grad_key, &m.entity[row]);
            mul_assign(&mut grad_rel, &m.relation[row]);
        }
        let ke = group.entity as usize;
        let kr = group.relation as usize;
        add_assign(&mut grads.entities[ke * w..(ke + 1) * w], &grad_key);
        add_assign(&mut grads.relations[kr * w..(kr + 1) * w], &grad_rel);
    }
    loss *= scale;

    if model.kind == ModelKind::TransE && l2 > 0.0 {
        let rows = (model.n_entities() + model.n_relations()) as f64;
        let sq: f64 = model
            .entities
            .values()
            .iter()
            .chain(model.relations.values())
            .map(|v| v * v)
            .sum();
        loss += l2 * sq / rows;
        let c = 2.0 * l2 / rows;
        for (g, v) in grads.entities.iter_mut().zip(model.entities.values()) {
            *g += c * v;
        }
        for (g, v) in grads.relations.iter_mut().zip(model.relations.values()) {
            *g += c * v;
        }
    }
    loss
}

fn mul_assign(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

fn add_assign(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn dropout_masks(rng: &mut ChaCha8Rng, rows: usize, width: usize, p: f64) -> DropoutMasks {
    let keep = 1.0 / (1.0 - p);
    let mut mask = || {
        (0..width)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect::<Vec<f64>>()
    };
    let mut m = DropoutMasks::default();
    for _ in 0..rows {
        m.entity.push(mask());
        m.relation.push(mask());
    }
    m
}

/// Trains a fresh model initialised from `config.seed`.
pub fn train(dataset: &Dataset, kind: ModelKind, config: &TrainConfig) -> Result<(Model, TrainReport)> {
    train_with_progress(dataset, kind, config, |_, _| {})
}

/// Like [`train`], calling `progress(epoch, mean_loss)` after every epoch.
pub fn train_with_progress(
    dataset: &Dataset,
    kind: ModelKind,
    config: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let start = Instant::now();
    let mut model = Model::init(kind, dataset.n_entities(), dataset.n_relations(), config.dim, config.seed);
    model.margin = config.margin;

    let (objects, subjects) = build_key_groups(dataset);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, &model);
    let mut grads = Gradients::zeros_like(&model);
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(config.epochs),
        epoch_seconds: Vec::with_capacity(config.epochs),
        seconds: 0.0,
        config_hash: config.hash(),
    };

    let mut obj_order: Vec<usize> = (0..objects.len()).collect();
    let mut subj_order: Vec<usize> = (0..subjects.len()).collect();
    let width = model.entities.cols();

    for epoch in 0..config.epochs {
        obj_order.shuffle(&mut rng);
        subj_order.shuffle(&mut rng);
        let obj_batches: Vec<&[usize]> = obj_order.chunks(config.batch_size).collect();
        let subj_batches: Vec<&[usize]> = subj_order.chunks(config.batch_size).collect();
        let steps = obj_batches.len().max(subj_batches.len());

        let mut total = 0.0;
        let mut count = 0usize;
        for step in 0..steps {
            let pair = [
                obj_batches.get(step).map(|b| (b, &objects)),
                subj_batches.get(step).map(|b| (b, &subjects)),
            ];
            for (idx, groups) in pair.into_iter().flatten() {
                let batch: Vec<&KeyGroup> = idx.iter().map(|&i| &groups[i]).collect();
                let masks = (config.input_dropout > 0.0)
                    .then(|| dropout_masks(&mut rng, batch.len(), width, config.input_dropout));
                let loss = loss_and_grads(
                    &model,
                    &batch,
                    config.label_smoothing,
                    config.l2,
                    masks.as_ref(),
                    &mut grads,
                );
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch: epoch + 1,
                        batch: count + 1,
                    });
                }
                optimizer.apply(&mut model, &grads);
                total += loss;
                count += 1;
            }
        }
        let mean = total / count as f64;
        report.epoch_losses.push(mean);
        report.epoch_seconds.push(start.elapsed().as_secs_f64());
        log::debug!("epoch {} loss {mean:.6}", epoch + 1);
        progress(epoch + 1, mean);
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok((model, report))
}
