//! Adversarial additions that exploit inference patterns.
//!
//! An attack picks, for each target triple and each side, one decoy entity and
//! adds the body of a pattern grounding whose head is the decoy triple. Edits
//! never include the decoy triple itself.

pub mod audit;
pub mod baseline;
pub mod decoy;
pub mod kmeans;
pub mod logic;
pub mod relations;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

pub use baseline::{generate_random_baseline, BaselineKind};
pub use decoy::{DecoyChoice, PatternRelations, Step3Mode};
pub use kmeans::EntityClusters;
pub use logic::GroundingScore;

use crate::error::{Error, IoContext, Result};
use crate::graph::{Dataset, EntityId, FilterIndex, RelationId, Side, Triple, Vocabulary};
use crate::model::{Model, Scorer};
use decoy::{
    attack_candidates, composition_body, select_adversarial_entity_com, select_decoy_cos, select_decoy_rank,
    select_decoy_truth, single_body_atom,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    Sym,
    Inv,
    Com,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Sym, Pattern::Inv, Pattern::Com];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Sym => "sym",
            Pattern::Inv => "inv",
            Pattern::Com => "com",
        }
    }

    /// Edit triples added per decoy.
    pub fn triples_per_decoy(self) -> usize {
        match self {
            Pattern::Com => 2,
            _ => 1,
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sym" => Ok(Pattern::Sym),
            "inv" => Ok(Pattern::Inv),
            "com" => Ok(Pattern::Com),
            _ => Err(Error::Config(format!("unknown pattern {s:?}"))),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heuristic {
    Truth,
    Rank,
    Cos,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [Heuristic::Truth, Heuristic::Rank, Heuristic::Cos];

    pub fn as_str(self) -> &'static str {
        match self {
            Heuristic::Truth => "truth",
            Heuristic::Rank => "rank",
            Heuristic::Cos => "cos",
        }
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "truth" => Ok(Heuristic::Truth),
            "rank" => Ok(Heuristic::Rank),
            "cos" => Ok(Heuristic::Cos),
            _ => Err(Error::Config(format!("unknown heuristic {s:?}"))),
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Step3Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "literal" => Ok(Step3Mode::Literal),
            "body" => Ok(Step3Mode::Body),
            _ => Err(Error::Config(format!("unknown step3 mode {s:?}"))),
        }
    }
}

impl Step3Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Step3Mode::Literal => "literal",
            Step3Mode::Body => "body",
        }
    }
}

pub const DEFAULT_CLUSTERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackConfig {
    pub pattern: Pattern,
    pub heuristic: Heuristic,
    /// Only used by composition with the soft-truth heuristic.
    pub clusters_k: usize,
    pub seed: u64,
    pub step3_mode: Step3Mode,
    /// Leave the target relation out of the composition pair search.
    pub exclude_target_relation: bool,
}

impl AttackConfig {
    pub fn new(pattern: Pattern, heuristic: Heuristic) -> Self {
        Self {
            pattern,
            heuristic,
            clusters_k: DEFAULT_CLUSTERS,
            seed: 0,
            step3_mode: Step3Mode::default(),
            exclude_target_relation: false,
        }
    }

    /// Display name such as `Sym_truth`.
    pub fn name(&self) -> String {
        let p = self.pattern.as_str();
        let mut cap = p[..1].to_ascii_uppercase();
        cap.push_str(&p[1..]);
        format!("{cap}_{}", self.heuristic)
    }

    pub fn needs_clusters(&self) -> bool {
        self.pattern == Pattern::Com && self.heuristic == Heuristic::Truth
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters_k == 0 {
            return Err(Error::Config("clusters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Triples added to train for one target side, with provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversarialEdit {
    pub triples: Vec<Triple>,
    /// `sym`, `inv`, `com` or a baseline name.
    pub pattern: String,
    /// `truth`, `rank`, `cos`, or `none` for baselines.
    pub heuristic: String,
    pub target: Triple,
    pub side: Side,
    pub decoy: Option<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    NoCandidates,
    NoNegativeBelowTarget,
    NoIntermediateEntity,
    SingleRelation,
    RetriesExhausted,
    /// Every edit triple was already present or emitted.
    AllEditsFiltered,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipReason::NoCandidates => "no valid decoy candidates",
            SkipReason::NoNegativeBelowTarget => "no candidate ranked below the target",
            SkipReason::NoIntermediateEntity => "no admissible intermediate entity",
            SkipReason::SingleRelation => "fewer than two relations",
            SkipReason::RetriesExhausted => "resampling budget exhausted",
            SkipReason::AllEditsFiltered => "all edit triples already present",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Skip {
    pub target: Triple,
    pub side: Side,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutput {
    pub name: String,
    pub edits: Vec<AdversarialEdit>,
    pub decoys: Vec<DecoyChoice>,
    pub skipped: Vec<Skip>,
    /// Wall-clock seconds spent generating, excluding any clustering.
    pub seconds: f64,
}

impl AttackOutput {
    /// All edit triples in emission order.
    pub fn triples(&self) -> Vec<Triple> {
        self.edits.iter().flat_map(|e| e.triples.iter().copied()).collect()
    }

    pub fn n_triples(&self) -> usize {
        self.edits.iter().map(|e| e.triples.len()).sum()
    }

    /// An attack that adds nothing.
    pub fn empty(name: &str) -> Self {
        Self {
            name: name.to_string(),
            edits: Vec::new(),
            decoys: Vec::new(),
            skipped: Vec::new(),
            seconds: 0.0,
        }
    }
}

/// Clusters needed by `config`, if any. Kept separate so that generation timing
/// excludes clustering.
pub fn fit_clusters(model: &Model, config: &AttackConfig) -> Result<Option<EntityClusters>> {
    if !config.needs_clusters() {
        return Ok(None);
    }
    config.validate()?;
    EntityClusters::fit(model, config.clusters_k, config.seed).map(Some)
}

/// Step 1 result per target relation.
fn pattern_relations(
    model: &Model,
    config: &AttackConfig,
    relation: RelationId,
) -> Option<PatternRelations> {
    match config.pattern {
        Pattern::Sym => Some(PatternRelations::Symmetry),
        Pattern::Inv => {
            relations::find_inverse_relation(model, relation).map(|(ri, _)| PatternRelations::Inversion(ri))
        }
        Pattern::Com => relations::find_composition_pair(model, relation, config.exclude_target_relation)
            .map(|((r1, r2), _)| PatternRelations::Composition(r1, r2)),
    }
}

/// Edit triples for one decoy, before filtering.
pub fn edit_triples(
    target: &Triple,
    side: Side,
    decoy: EntityId,
    relations: PatternRelations,
    intermediate: Option<EntityId>,
) -> Vec<Triple> {
    match relations {
        PatternRelations::Symmetry => vec![single_body_atom(target, side, decoy, target.relation)],
        PatternRelations::Inversion(ri) => vec![single_body_atom(target, side, decoy, ri)],
        PatternRelations::Composition(r1, r2) => {
            let mid = intermediate.expect("composition edits need an intermediate entity");
            composition_body(target, side, decoy, (r1, r2), mid).to_vec()
        }
    }
}

type SideResult = std::result::Result<(DecoyChoice, Vec<Triple>), SkipReason>;

#[allow(clippy::too_many_arguments)]
fn attack_side<S: Scorer + ?Sized>(
    scorer: &S,
    config: &AttackConfig,
    target: &Triple,
    side: Side,
    relations: PatternRelations,
    filter: &FilterIndex,
    train: &HashSet<Triple>,
    clusters: Option<&EntityClusters>,
) -> SideResult {
    let model = scorer.model();
    let candidates = attack_candidates(target, side, relations, filter, model.n_entities());
    if candidates.is_empty() {
        return Err(SkipReason::NoCandidates);
    }
    let choice = match config.heuristic {
        Heuristic::Truth => select_decoy_truth(scorer, target, side, relations, &candidates, clusters),
        Heuristic::Rank => select_decoy_rank(scorer, target, side, &candidates),
        Heuristic::Cos => select_decoy_cos(model, target, side, &candidates),
    }
    .ok_or(match config.heuristic {
        Heuristic::Rank => SkipReason::NoNegativeBelowTarget,
        _ => SkipReason::NoCandidates,
    })?;
    let mid = match relations {
        PatternRelations::Composition(r1, r2) => Some(
            select_adversarial_entity_com(scorer, &choice, (r1, r2), config.step3_mode, train)
                .ok_or(SkipReason::NoIntermediateEntity)?,
        ),
        _ => None,
    };
    let triples = edit_triples(target, side, choice.entity, relations, mid);
    Ok((choice, triples))
}

/// Generates the configured attack against every target, both sides.
///
/// Edit triples already present in any split are dropped, duplicates across
/// targets are emitted once (first target wins), and no edit equals a decoy
/// triple. Composition with soft truth needs `clusters` from [`fit_clusters`].
pub fn generate_attack<S: Scorer + ?Sized>(
    scorer: &S,
    dataset: &Dataset,
    filter: &FilterIndex,
    targets: &[Triple],
    config: &AttackConfig,
    clusters: Option<&EntityClusters>,
) -> Result<AttackOutput> {
    config.validate()?;
    if config.needs_clusters() && clusters.is_none() {
        return Err(Error::Config("composition soft-truth requires entity clusters".into()));
    }
    let start = Instant::now();
    let model = scorer.model();
    let train = dataset.train_set();

    let mut distinct: Vec<RelationId> = targets.iter().map(|t| t.relation).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let step1: BTreeMap<RelationId, Option<PatternRelations>> = distinct
        .into_iter()
        .map(|r| (r, pattern_relations(model, config, r)))
        .collect();

    let results: Vec<(Triple, Side, SideResult)> = targets
        .par_iter()
        .flat_map_iter(|t| Side::BOTH.map(|side| (*t, side)))
        .map(|(t, side)| {
            let res = match step1[&t.relation] {
                None => Err(SkipReason::SingleRelation),
                Some(rels) => attack_side(scorer, config, &t, side, rels, filter, &train, clusters),
            };
            (t, side, res)
        })
        .collect();

    let decoy_triples: HashSet<Triple> = results
        .iter()
        .filter_map(|(_, _, r)| r.as_ref().ok().map(|(c, _)| c.decoy_triple()))
        .collect();
    let mut emitted: HashSet<Triple> = dataset.all_triples().copied().collect();
    let mut out = AttackOutput::empty(&config.name());
    for (target, side, res) in results {
        match res {
            Err(reason) => {
                log::info!("{}: skipping {target} on the {side} side: {reason}", out.name);
                out.skipped.push(Skip { target, side, reason });
            }
            Ok((choice, triples)) => {
                out.decoys.push(choice);
                let kept: Vec<Triple> = triples
                    .into_iter()
                    .filter(|t| !decoy_triples.contains(t) && emitted.insert(*t))
                    .collect();
                if kept.is_empty() {
                    out.skipped.push(Skip {
                        target,
                        side,
                        reason: SkipReason::AllEditsFiltered,
                    });
                    continue;
                }
                out.edits.push(AdversarialEdit {
                    triples: kept,
                    pattern: config.pattern.as_str().to_string(),
                    heuristic: config.heuristic.as_str().to_string(),
                    target,
                    side,
                    decoy: Some(choice.entity),
                });
            }
        }
    }
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

const EDITS_HEADER: &str = "subject\trelation\tobject\tpattern\theuristic\ttarget_subject\ttarget_relation\ttarget_object\tside";

/// Writes one row per edit triple, using vocabulary names.
pub fn write_edits_tsv(path: &Path, edits: &[AdversarialEdit], vocabulary: &Vocabulary) -> Result<()> {
    let file = fs::File::create(path).at(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{EDITS_HEADER}").at(path)?;
    for e in edits {
        let t = names(&e.target, vocabulary);
        for x in &e.triples {
            let n = names(x, vocabulary);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                n[0], n[1], n[2], e.pattern, e.heuristic, t[0], t[1], t[2], e.side
            )
            .at(path)?;
        }
    }
    w.flush().at(path)
}

fn names<'a>(t: &Triple, v: &'a Vocabulary) -> [&'a str; 3] {
    [
        v.entity_name(t.subject).unwrap_or("?"),
        v.relation_name(t.relation).unwrap_or("?"),
        v.entity_name(t.object).unwrap_or("?"),
    ]
}

/// Reads the first three columns of an edits file; provenance is ignored.
pub fn read_edits_tsv(path: &Path, vocabulary: &Vocabulary) -> Result<Vec<Triple>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || (i == 0 && line.starts_with("subject\t")) {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                found: f.len(),
            });
        }
        let lookup = |e: &str| {
            vocabulary
                .entity_id(e)
                .ok_or_else(|| Error::Config(format!("{}:{}: unknown entity {e:?}", path.display(), i + 1)))
        };
        let r = vocabulary
            .relation_id(f[1])
            .ok_or_else(|| Error::Config(format!("{}:{}: unknown relation {:?}", path.display(), i + 1, f[1])))?;
        out.push(Triple::new(lookup(f[0])?, r, lookup(f[2])?));
    }
    Ok(out)
}

const DECOYS_HEADER: &str = "target_subject\ttarget_relation\ttarget_object\tside\tdecoy\tscore";

pub fn write_decoys_tsv(path: &Path, decoys: &[DecoyChoice], vocabulary: &Vocabulary) -> Result<()> {
    let file = fs::File::create(path).at(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{DECOYS_HEADER}").at(path)?;
    for d in decoys {
        let t = names(&d.target, vocabulary);
        let e = vocabulary.entity_name(d.entity).unwrap_or("?");
        writeln!(w, "{}\t{}\t{}\t{}\t{e}\t{}", t[0], t[1], t[2], d.side, d.score).at(path)?;
    }
    w.flush().at(path)
}

pub fn read_decoys_tsv(path: &Path, vocabulary: &Vocabulary) -> Result<Vec<DecoyChoice>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                found: f.len(),
            });
        }
        let bad = |what: &str| Error::Config(format!("{}:{}: bad {what}", path.display(), i + 1));
        let ent = |s: &str| vocabulary.entity_id(s).ok_or_else(|| bad("entity"));
        out.push(DecoyChoice {
            target: Triple::new(
                ent(f[0])?,
                vocabulary.relation_id(f[1]).ok_or_else(|| bad("relation"))?,
                ent(f[2])?,
            ),
            side: f[3].parse()?,
            entity: ent(f[4])?,
            score: f[5].parse().map_err(|_| bad("score"))?,
        });
    }
    Ok(out)
}
