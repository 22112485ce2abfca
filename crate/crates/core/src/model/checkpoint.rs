//! On-disk model checkpoints.
//!
//! A checkpoint directory holds `meta.txt` (`key=value` lines) plus
//! `entities.bin` and `relations.bin`. Each `.bin` file is the 8-byte magic
//! `KGECKPT1`, then `rows` and `cols` as little-endian `u64`, then `rows * cols`
//! little-endian `f32` values in row-major order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{EmbeddingTable, Model, ModelKind};
use crate::error::{Error, IoContext, Result};

const MAGIC: &[u8; 8] = b"KGECKPT1";
const HEADER: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub kind: ModelKind,
    pub dim: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub margin: f64,
    pub seed: u64,
    pub train_config_hash: String,
}

impl CheckpointMeta {
    pub fn for_model(model: &Model, train_config_hash: &str) -> Self {
        Self {
            kind: model.kind,
            dim: model.dim,
            n_entities: model.n_entities(),
            n_relations: model.n_relations(),
            margin: model.margin,
            seed: model.seed,
            train_config_hash: train_config_hash.to_owned(),
        }
    }

    fn render(&self) -> String {
        format!(
            "kind={}\ndim={}\nn_entities={}\nn_relations={}\nmargin={}\nseed={}\ntrain_config_hash={}\n",
            self.kind,
            self.dim,
            self.n_entities,
            self.n_relations,
            self.margin,
            self.seed,
            self.train_config_hash
        )
    }

    fn parse(text: &str) -> Result<Self> {
        let map: BTreeMap<&str, &str> = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        let get = |key: &str| {
            map.get(key)
                .copied()
                .ok_or_else(|| Error::Checkpoint(format!("meta.txt lacks '{key}'")))
        };
        let num = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad value for '{key}'")))
        };
        Ok(Self {
            kind: get("kind")?.parse()?,
            dim: num("dim")?,
            n_entities: num("n_entities")?,
            n_relations: num("n_relations")?,
            margin: get("margin")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad margin".into()))?,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad seed".into()))?,
            train_config_hash: get("train_config_hash")?.to_owned(),
        })
    }
}

pub fn save_checkpoint(dir: &Path, model: &Model, train_config_hash: &str) -> Result<()> {
    fs::create_dir_all(dir).at(dir)?;
    let meta = CheckpointMeta::for_model(model, train_config_hash);
    fs::write(dir.join("meta.txt"), meta.render()).at(dir.join("meta.txt"))?;
    write_table(&dir.join("entities.bin"), &model.entities)?;
    write_table(&dir.join("relations.bin"), &model.relations)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(Model, CheckpointMeta)> {
    let meta_path = dir.join("meta.txt");
    let meta = CheckpointMeta::parse(&fs::read_to_string(&meta_path).at(&meta_path)?)?;
    let width = meta.kind.storage_width(meta.dim);
    let entities = read_table(&dir.join("entities.bin"), meta.n_entities, width)?;
    let relations = read_table(&dir.join("relations.bin"), meta.n_relations, width)?;
    let model = Model {
        kind: meta.kind,
        dim: meta.dim,
        margin: meta.margin,
        seed: meta.seed,
        entities,
        relations,
    };
    Ok((model, meta))
}

fn write_table(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER + 4 * table.values().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(table.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(table.cols() as u64).to_le_bytes());
    for v in table.values() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, buf).at(path)
}

fn read_table(path: &Path, rows: usize, cols: usize) -> Result<EmbeddingTable> {
    let bytes = fs::read(path).at(path)?;
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err(Error::Checkpoint(format!("{} has a bad magic header", path.display())));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap()) as usize;
    let (r, c) = (word(8), word(16));
    if (r, c) != (rows, cols) {
        return Err(Error::Checkpoint(format!(
            "{} is {r}x{c}, meta.txt says {rows}x{cols}",
            path.display()
        )));
    }
    let body = &bytes[HEADER..];
    if body.len() != 4 * rows * cols {
        return Err(Error::Checkpoint(format!("{} is truncated", path.display())));
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    Ok(EmbeddingTable::from_values(rows, cols, values).expect("length checked"))
}
