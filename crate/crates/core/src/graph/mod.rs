//! Integer-coded triple datasets.
//!
//! A dataset directory holds `train.txt`, `valid.txt` and `test.txt`, each a UTF-8
//! file with one `subject<TAB>relation<TAB>object` triple per line. Vocabulary ids
//! are assigned by first occurrence in the training file (subject before object on
//! each line), so loading the same files always yields the same ids.

mod filter;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use filter::FilterIndex;

use crate::error::{Error, IoContext, Result};

pub type EntityId = u32;
pub type RelationId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

impl Triple {
    pub const fn new(subject: EntityId, relation: RelationId, object: EntityId) -> Self {
        Self {
            subject,
            relation,
            object,
        }
    }

    /// The entity sitting on `side`.
    pub fn entity(&self, side: Side) -> EntityId {
        match side {
            Side::Subject => self.subject,
            Side::Object => self.object,
        }
    }

    /// Copy of this triple with the entity on `side` replaced.
    pub fn with_entity(&self, side: Side, entity: EntityId) -> Self {
        match side {
            Side::Subject => Self::new(entity, self.relation, self.object),
            Side::Object => Self::new(self.subject, self.relation, entity),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.relation, self.object)
    }
}

/// Which entity slot of a triple is being ranked or replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Subject,
    Object,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Subject, Side::Object];

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Subject => "subject",
            Side::Object => "object",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Subject => Side::Object,
            Side::Object => Side::Subject,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subject" => Ok(Side::Subject),
            "object" => Ok(Side::Object),
            _ => Err(Error::Config(format!("unknown side {s:?}"))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bidirectional name <-> id maps with contiguous ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entity_names: Vec<String>,
    entity_ids: HashMap<String, EntityId>,
    relation_names: Vec<String>,
    relation_ids: HashMap<String, RelationId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vocabulary with generated names `e0..` and `r0..`.
    pub fn synthetic(n_entities: usize, n_relations: usize) -> Self {
        let mut vocab = Self::new();
        for i in 0..n_entities {
            vocab.intern_entity(&format!("e{i}"));
        }
        for i in 0..n_relations {
            vocab.intern_relation(&format!("r{i}"));
        }
        vocab
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_ids.get(name) {
            return id;
        }
        let id = self.entity_names.len() as EntityId;
        self.entity_names.push(name.to_owned());
        self.entity_ids.insert(name.to_owned(), id);
        id
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        if let Some(&id) = self.relation_ids.get(name) {
            return id;
        }
        let id = self.relation_names.len() as RelationId;
        self.relation_names.push(name.to_owned());
        self.relation_ids.insert(name.to_owned(), id);
        id
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: EntityId) -> Option<&str> {
        self.entity_names.get(id as usize).map(String::as_str)
    }

    pub fn relation_name(&self, id: RelationId) -> Option<&str> {
        self.relation_names.get(id as usize).map(String::as_str)
    }

    pub fn n_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relation_names.len()
    }

    /// True when every id of `t` indexes into this vocabulary.
    pub fn contains(&self, t: &Triple) -> bool {
        (t.subject as usize) < self.n_entities()
            && (t.object as usize) < self.n_entities()
            && (t.relation as usize) < self.n_relations()
    }

    fn resolve(&self, s: &str, r: &str, o: &str) -> Option<Triple> {
        Some(Triple::new(
            self.entity_id(s)?,
            self.relation_id(r)?,
            self.entity_id(o)?,
        ))
    }

    fn format(&self, t: &Triple) -> String {
        format!(
            "{}\t{}\t{}",
            self.entity_name(t.subject).unwrap_or("?"),
            self.relation_name(t.relation).unwrap_or("?"),
            self.entity_name(t.object).unwrap_or("?"),
        )
    }
}

/// Counts of lines discarded while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub duplicate_train: usize,
    pub dropped_valid: usize,
    pub dropped_test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub vocabulary: Vocabulary,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

impl Dataset {
    /// Builds a dataset from already integer-coded splits. Duplicate training
    /// triples are removed, keeping the first occurrence.
    pub fn from_parts(
        vocabulary: Vocabulary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        for t in train.iter().chain(&valid).chain(&test) {
            if !vocabulary.contains(t) {
                return Err(unknown(t));
            }
        }
        let mut seen = HashSet::with_capacity(train.len());
        let train = train.into_iter().filter(|t| seen.insert(*t)).collect();
        Ok(Self {
            vocabulary,
            train,
            valid,
            test,
        })
    }

    pub fn n_entities(&self) -> usize {
        self.vocabulary.n_entities()
    }

    pub fn n_relations(&self) -> usize {
        self.vocabulary.n_relations()
    }

    pub fn train_set(&self) -> HashSet<Triple> {
        self.train.iter().copied().collect()
    }

    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    /// Returns a copy whose train split also holds the given edits.
    ///
    /// Edits are deduplicated and edits already present in train are skipped;
    /// the second tuple element is the number of triples actually added.
    pub fn merge_poison(&self, edits: &[Triple]) -> Result<(Dataset, usize)> {
        if let Some(bad) = edits.iter().find(|t| !self.vocabulary.contains(t)) {
            return Err(unknown(bad));
        }
        let mut present = self.train_set();
        let mut train = self.train.clone();
        for t in edits {
            if present.insert(*t) {
                train.push(*t);
            }
        }
        let added = train.len() - self.train.len();
        let merged = Dataset {
            vocabulary: self.vocabulary.clone(),
            train,
            valid: self.valid.clone(),
            test: self.test.clone(),
        };
        Ok((merged, added))
    }

    /// Writes `train.txt`, `valid.txt` and `test.txt` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).at(dir)?;
        write_split(&dir.join("train.txt"), &self.train, &self.vocabulary)?;
        write_split(&dir.join("valid.txt"), &self.valid, &self.vocabulary)?;
        write_split(&dir.join("test.txt"), &self.test, &self.vocabulary)?;
        Ok(())
    }
}

fn unknown(t: &Triple) -> Error {
    Error::UnknownId {
        subject: t.subject as usize,
        relation: t.relation as usize,
        object: t.object as usize,
    }
}

/// Loads `train.txt`, `valid.txt` and `test.txt` from a dataset directory.
pub fn load_dataset_dir(dir: &Path) -> Result<(Dataset, LoadStats)> {
    load_dataset(
        &dir.join("train.txt"),
        &dir.join("valid.txt"),
        &dir.join("test.txt"),
    )
}

/// Loads three TSV splits. The vocabulary comes from the training file only;
/// valid/test lines naming anything unseen in train are dropped and counted.
pub fn load_dataset(train: &Path, valid: &Path, test: &Path) -> Result<(Dataset, LoadStats)> {
    let mut stats = LoadStats::default();
    let mut vocabulary = Vocabulary::new();
    let mut train_triples = Vec::new();
    let mut seen = HashSet::new();

    for (s, r, o) in read_tsv(train)? {
        let t = Triple::new(
            vocabulary.intern_entity(&s),
            vocabulary.intern_relation(&r),
            vocabulary.intern_entity(&o),
        );
        if seen.insert(t) {
            train_triples.push(t);
        } else {
            stats.duplicate_train += 1;
        }
    }
    if train_triples.is_empty() {
        return Err(Error::EmptyTrain(train.to_path_buf()));
    }

    let resolve = |path: &Path, dropped: &mut usize| -> Result<Vec<Triple>> {
        let mut out = Vec::new();
        for (s, r, o) in read_tsv(path)? {
            match vocabulary.resolve(&s, &r, &o) {
                Some(t) => out.push(t),
                None => *dropped += 1,
            }
        }
        Ok(out)
    };
    let valid_triples = resolve(valid, &mut stats.dropped_valid)?;
    let test_triples = resolve(test, &mut stats.dropped_test)?;

    if stats.duplicate_train > 0 {
        log::info!("dropped {} duplicate training lines", stats.duplicate_train);
    }
    if stats.dropped_valid + stats.dropped_test > 0 {
        log::info!(
            "dropped {} valid and {} test lines with unseen names",
            stats.dropped_valid,
            stats.dropped_test
        );
    }

    Ok((
        Dataset {
            vocabulary,
            train: train_triples,
            valid: valid_triples,
            test: test_triples,
        },
        stats,
    ))
}

fn read_tsv(path: &Path) -> Result<Vec<(String, String, String)>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                found: fields.len(),
            });
        }
        rows.push((
            fields[0].to_owned(),
            fields[1].to_owned(),
            fields[2].to_owned(),
        ));
    }
    Ok(rows)
}

pub fn write_split(path: &Path, triples: &[Triple], vocabulary: &Vocabulary) -> Result<()> {
    let file = fs::File::create(path).at(path)?;
    let mut out = BufWriter::new(file);
    for t in triples {
        writeln!(out, "{}", vocabulary.format(t)).at(path)?;
    }
    out.flush().at(path)
}
