//! Filtered link-prediction ranking, metrics and target selection.
//!
//! Ranks are optimistic: `rank = 1 + |{candidates scoring strictly higher}|`,
//! after removing every candidate that forms a known triple (other than the
//! true entity itself).

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, IoContext, Result};
use crate::graph::{Dataset, EntityId, FilterIndex, Side, Triple, Vocabulary};
use crate::model::Model;

pub const HITS_AT: [usize; 3] = [1, 3, 10];

/// Filtered rank of `truth` among `scores`, ignoring the entities in `filtered`.
pub fn rank_from_scores(scores: &[f64], truth: EntityId, filtered: &[EntityId]) -> usize {
    let target = scores[truth as usize];
    let mut above = scores.iter().filter(|&&s| s > target).count();
    for &f in filtered {
        if f != truth && scores[f as usize] > target {
            above -= 1;
        }
    }
    above + 1
}

pub fn rank_triple(model: &Model, triple: &Triple, filter: &FilterIndex, side: Side) -> usize {
    let scores = model.score_all(triple, side);
    rank_from_scores(&scores, triple.entity(side), filter.known(triple, side))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankOutcome {
    pub triple: Triple,
    pub subject_rank: usize,
    pub object_rank: usize,
}

impl RankOutcome {
    pub fn rank(&self, side: Side) -> usize {
        match side {
            Side::Subject => self.subject_rank,
            Side::Object => self.object_rank,
        }
    }
}

/// Both-side ranks for every triple, computed in parallel.
pub fn rank_all(model: &Model, triples: &[Triple], filter: &FilterIndex) -> Vec<RankOutcome> {
    triples
        .par_iter()
        .map(|t| RankOutcome {
            triple: *t,
            subject_rank: rank_triple(model, t, filter, Side::Subject),
            object_rank: rank_triple(model, t, filter, Side::Object),
        })
        .collect()
}

/// Which ranks a [`MetricsReport`] aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSide {
    Subject,
    Object,
    Both,
}

impl From<Side> for RankSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Subject => RankSide::Subject,
            Side::Object => RankSide::Object,
        }
    }
}

impl fmt::Display for RankSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankSide::Subject => "subject",
            RankSide::Object => "object",
            RankSide::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mr: f64,
    pub mrr: f64,
    /// Hits@1, Hits@3, Hits@10, in the order of [`HITS_AT`].
    pub hits: [f64; 3],
    pub side: RankSide,
    pub n: usize,
}

impl MetricsReport {
    pub fn from_ranks(ranks: &[usize], side: RankSide) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let n = ranks.len() as f64;
        let mr = ranks.iter().map(|&r| r as f64).sum::<f64>() / n;
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        let hits = HITS_AT.map(|k| ranks.iter().filter(|&&r| r <= k).count() as f64 / n);
        Ok(Self {
            mr,
            mrr,
            hits,
            side,
            n: ranks.len(),
        })
    }

    pub fn from_outcomes(outcomes: &[RankOutcome], side: RankSide) -> Result<Self> {
        let ranks: Vec<usize> = match side {
            RankSide::Subject => outcomes.iter().map(|o| o.subject_rank).collect(),
            RankSide::Object => outcomes.iter().map(|o| o.object_rank).collect(),
            RankSide::Both => outcomes
                .iter()
                .flat_map(|o| [o.subject_rank, o.object_rank])
                .collect(),
        };
        Self::from_ranks(&ranks, side)
    }

    pub fn hits_at(&self, k: usize) -> Option<f64> {
        HITS_AT.iter().position(|&h| h == k).map(|i| self.hits[i])
    }

    /// Rows of `metric<TAB>side<TAB>value`, without header.
    pub fn tsv_rows(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mr\t{}\t{}", self.side, self.mr);
        let _ = writeln!(out, "mrr\t{}\t{}", self.side, self.mrr);
        for (k, h) in HITS_AT.iter().zip(self.hits) {
            let _ = writeln!(out, "hits@{k}\t{}\t{h}", self.side);
        }
        let _ = writeln!(out, "n\t{}\t{}", self.side, self.n);
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: n={} MR={:.3} MRR={:.4} Hits@1={:.4} Hits@3={:.4} Hits@10={:.4}",
            self.side, self.n, self.mr, self.mrr, self.hits[0], self.hits[1], self.hits[2]
        )
    }
}

/// Metrics over both sides of every triple.
pub fn evaluate(model: &Model, triples: &[Triple], filter: &FilterIndex) -> Result<MetricsReport> {
    if triples.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    MetricsReport::from_outcomes(&rank_all(model, triples, filter), RankSide::Both)
}

/// Subject, object and combined metrics.
pub fn evaluate_sides(model: &Model, triples: &[Triple], filter: &FilterIndex) -> Result<[MetricsReport; 3]> {
    if triples.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let outcomes = rank_all(model, triples, filter);
    Ok([
        MetricsReport::from_outcomes(&outcomes, RankSide::Subject)?,
        MetricsReport::from_outcomes(&outcomes, RankSide::Object)?,
        MetricsReport::from_outcomes(&outcomes, RankSide::Both)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetRecord {
    pub triple: Triple,
    pub subject_rank: usize,
    pub object_rank: usize,
}

/// How the rank cutoff is applied when selecting targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetRule {
    /// Both the subject and the object rank must be within the cutoff.
    #[default]
    BothSides,
    /// Either rank within the cutoff is enough.
    EitherSide,
}

/// Test triples the model already ranks within `cutoff`.
pub fn select_targets(
    model: &Model,
    dataset: &Dataset,
    filter: &FilterIndex,
    cutoff: usize,
    rule: TargetRule,
) -> Vec<TargetRecord> {
    rank_all(model, &dataset.test, filter)
        .into_iter()
        .filter(|o| target_passes(o.subject_rank, o.object_rank, cutoff, rule))
        .map(|o| TargetRecord {
            triple: o.triple,
            subject_rank: o.subject_rank,
            object_rank: o.object_rank,
        })
        .collect()
}

pub fn target_passes(subject_rank: usize, object_rank: usize, cutoff: usize, rule: TargetRule) -> bool {
    match rule {
        TargetRule::BothSides => subject_rank <= cutoff && object_rank <= cutoff,
        TargetRule::EitherSide => subject_rank <= cutoff || object_rank <= cutoff,
    }
}

const TARGETS_HEADER: &str = "subject\trelation\tobject\tsubject_rank\tobject_rank";

pub fn write_targets_tsv(path: &Path, targets: &[TargetRecord], vocabulary: &Vocabulary) -> Result<()> {
    let mut s = String::from(TARGETS_HEADER);
    s.push('\n');
    for t in targets {
        let x = &t.triple;
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            vocabulary.entity_name(x.subject).unwrap_or("?"),
            vocabulary.relation_name(x.relation).unwrap_or("?"),
            vocabulary.entity_name(x.object).unwrap_or("?"),
            t.subject_rank,
            t.object_rank
        );
    }
    fs::write(path, s).at(path)
}

/// Reads the triples of a targets file; rank columns are ignored.
pub fn read_targets_tsv(path: &Path, vocabulary: &Vocabulary) -> Result<Vec<Triple>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if f.len() < 3 {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                found: f.len(),
            });
        }
        let bad = || Error::Config(format!("{}:{}: name not in vocabulary", path.display(), i + 1));
        out.push(Triple::new(
            vocabulary.entity_id(f[0]).ok_or_else(bad)?,
            vocabulary.relation_id(f[1]).ok_or_else(bad)?,
            vocabulary.entity_id(f[2]).ok_or_else(bad)?,
        ));
    }
    Ok(out)
}
