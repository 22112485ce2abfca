//! End-to-end experiments: train clean, pick targets, attack, retrain, compare.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::attack::{
    fit_clusters, generate_attack, generate_random_baseline, write_decoys_tsv, write_edits_tsv, AttackConfig,
    AttackOutput, BaselineKind, DecoyChoice, Heuristic, Pattern,
};
use crate::error::{Error, IoContext, Result};
use crate::eval::{evaluate, rank_triple, select_targets, MetricsReport, RankSide, TargetRule};
use crate::graph::{load_dataset_dir, Dataset, FilterIndex, Side, Triple};
use crate::model::{Model, ModelKind};
use crate::train::{train, TrainConfig};

/// One attack row of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    Pattern(AttackConfig),
    Baseline(BaselineKind),
    /// Adds nothing; the retrain must reproduce the clean model.
    Empty,
}

impl AttackSpec {
    pub fn name(&self) -> String {
        match self {
            AttackSpec::Pattern(c) => c.name(),
            AttackSpec::Baseline(b) => b.name().to_string(),
            AttackSpec::Empty => "None".to_string(),
        }
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    /// Accepts `sym_truth`, `com_rank`, `random_n`, `none` and the like.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "none" || lower == "empty" {
            return Ok(AttackSpec::Empty);
        }
        if let Ok(b) = lower.parse::<BaselineKind>() {
            return Ok(AttackSpec::Baseline(b));
        }
        let (p, h) = lower
            .split_once('_')
            .ok_or_else(|| Error::Config(format!("unknown attack {s:?}")))?;
        Ok(AttackSpec::Pattern(AttackConfig::new(p.parse::<Pattern>()?, h.parse::<Heuristic>()?)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dataset_dir: Option<PathBuf>,
    pub model: ModelKind,
    pub train: TrainConfig,
    pub attacks: Vec<AttackSpec>,
    pub out_dir: Option<PathBuf>,
    /// One full experiment per seed; each seed drives training, clustering and baselines.
    pub seeds: Vec<u64>,
    pub target_cutoff: usize,
    pub target_rule: TargetRule,
    /// Retrain poisoned models from a different seed than the clean run.
    pub vary_retrain_seed: bool,
}

impl PipelineConfig {
    pub fn new(model: ModelKind, train: TrainConfig, attacks: Vec<AttackSpec>) -> Self {
        Self {
            dataset_dir: None,
            model,
            seeds: vec![train.seed],
            train,
            attacks,
            out_dir: None,
            target_cutoff: 10,
            target_rule: TargetRule::default(),
            vary_retrain_seed: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.attacks.is_empty() {
            return Err(Error::Config("at least one attack is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.train.validate()?;
        for a in &self.attacks {
            if let AttackSpec::Pattern(c) = a {
                c.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanRow {
    pub seed: u64,
    pub test: MetricsReport,
    pub n_targets: usize,
    pub target_mrr: f64,
    pub target_hits1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackRow {
    pub seed: u64,
    pub attack: String,
    pub n_edits: usize,
    pub clean_mrr: f64,
    pub clean_hits1: f64,
    pub poisoned_mrr: f64,
    pub poisoned_hits1: f64,
    /// `(clean - poisoned) / clean` on target MRR.
    pub relative_change: f64,
    pub seconds: f64,
    /// Set when the row aborted; metric fields are then NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoyRow {
    pub seed: u64,
    pub attack: String,
    pub side: Side,
    pub n: usize,
    pub clean_mrr: f64,
    pub poisoned_mrr: f64,
    /// `(poisoned - clean) / clean` on decoy MRR.
    pub relative_change: f64,
}

/// Per-attack means across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub attack: String,
    pub seeds: usize,
    pub clean_mrr: f64,
    pub poisoned_mrr: f64,
    pub relative_change: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub clean: Vec<CleanRow>,
    pub attacks: Vec<AttackRow>,
    pub decoys: Vec<DecoyRow>,
}

impl ExperimentReport {
    /// Mean over seeds of every successful attack row, in first-seen order.
    pub fn means(&self) -> Vec<MeanRow> {
        let mut order: Vec<String> = Vec::new();
        for r in &self.attacks {
            if !order.contains(&r.attack) {
                order.push(r.attack.clone());
            }
        }
        order
            .into_iter()
            .filter_map(|name| {
                let rows: Vec<&AttackRow> = self
                    .attacks
                    .iter()
                    .filter(|r| r.attack == name && r.error.is_none())
                    .collect();
                if rows.is_empty() {
                    return None;
                }
                let n = rows.len() as f64;
                let mean = |f: fn(&AttackRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
                Some(MeanRow {
                    attack: name,
                    seeds: rows.len(),
                    clean_mrr: mean(|r| r.clean_mrr),
                    poisoned_mrr: mean(|r| r.poisoned_mrr),
                    relative_change: mean(|r| r.relative_change),
                    seconds: mean(|r| r.seconds),
                })
            })
            .collect()
    }

    pub fn mean_of(&self, attack: &str) -> Option<MeanRow> {
        self.means().into_iter().find(|m| m.attack == attack)
    }

    pub fn runtime(&self) -> Vec<(String, f64)> {
        runtime_report(&self.attacks)
    }

    pub fn attacks_tsv(&self) -> String {
        let mut s = String::from(
            "seed\tattack\tedits\tclean_mrr\tclean_hits1\tpoisoned_mrr\tpoisoned_hits1\trelative_change\terror\n",
        );
        for r in &self.attacks {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.seed,
                r.attack,
                r.n_edits,
                r.clean_mrr,
                r.clean_hits1,
                r.poisoned_mrr,
                r.poisoned_hits1,
                r.relative_change,
                r.error.as_deref().unwrap_or("")
            );
        }
        s
    }

    pub fn means_tsv(&self) -> String {
        let mut s = String::from("attack\tseeds\tclean_mrr\tpoisoned_mrr\trelative_change\n");
        for m in self.means() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                m.attack, m.seeds, m.clean_mrr, m.poisoned_mrr, m.relative_change
            );
        }
        s
    }

    pub fn decoys_tsv(&self) -> String {
        decoy_rows_tsv(&self.decoys)
    }

    pub fn runtime_tsv(&self) -> String {
        let mut s = String::from("seed\tattack\tseconds\n");
        for r in &self.attacks {
            let _ = writeln!(s, "{}\t{}\t{}", r.seed, r.attack, r.seconds);
        }
        s
    }

    pub fn clean_tsv(&self) -> String {
        let mut s = String::from("seed\ttest_mrr\ttest_hits1\ttest_hits10\ttargets\ttarget_mrr\ttarget_hits1\n");
        for c in &self.clean {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.seed, c.test.mrr, c.test.hits[0], c.test.hits[2], c.n_targets, c.target_mrr, c.target_hits1
            );
        }
        s
    }
}

pub fn decoy_rows_tsv(rows: &[DecoyRow]) -> String {
    let mut s = String::from("seed\tattack\tside\tn\tclean_mrr\tpoisoned_mrr\trelative_change\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.seed, r.attack, r.side, r.n, r.clean_mrr, r.poisoned_mrr, r.relative_change
        );
    }
    s
}

/// Generation seconds per attack row, training and clustering excluded.
pub fn runtime_report(rows: &[AttackRow]) -> Vec<(String, f64)> {
    rows.iter().map(|r| (r.attack.clone(), r.seconds)).collect()
}

/// Decoy-triple MRR under both models, per side, ranked on the decoy's side.
///
/// A side without decoys yields no row.
pub fn decoy_report(
    clean: &Model,
    poisoned: &Model,
    decoys: &[DecoyChoice],
    filter: &FilterIndex,
) -> Vec<(Side, usize, f64, f64)> {
    let mut rows = Vec::new();
    for side in Side::BOTH {
        let triples: Vec<Triple> = decoys.iter().filter(|d| d.side == side).map(|d| d.decoy_triple()).collect();
        if triples.is_empty() {
            log::info!("no {side}-side decoys; row omitted");
            continue;
        }
        let mrr = |m: &Model| {
            triples.iter().map(|t| 1.0 / rank_triple(m, t, filter, side) as f64).sum::<f64>() / triples.len() as f64
        };
        rows.push((side, triples.len(), mrr(clean), mrr(poisoned)));
    }
    rows
}

/// Train-config hash with the seed field neutralised.
fn seedless_hash(c: &TrainConfig) -> String {
    TrainConfig { seed: 0, ..c.clone() }.hash()
}

fn target_metrics(model: &Model, targets: &[Triple], filter: &FilterIndex) -> Result<(f64, f64)> {
    let m = evaluate(model, targets, filter)?;
    Ok((m.mrr, m.hits[0]))
}

struct SeedContext<'a> {
    dataset: &'a Dataset,
    config: &'a PipelineConfig,
    train: TrainConfig,
    clean: Model,
    clean_hash: String,
    filter: FilterIndex,
    targets: Vec<Triple>,
    clean_mrr: f64,
    clean_hits1: f64,
}

impl SeedContext<'_> {
    fn generate(&self, spec: &AttackSpec) -> Result<AttackOutput> {
        let seed = self.train.seed;
        match spec {
            AttackSpec::Empty => Ok(AttackOutput::empty("None")),
            AttackSpec::Baseline(b) => Ok(generate_random_baseline(self.dataset, &self.targets, *b, seed)),
            AttackSpec::Pattern(c) => {
                let c = AttackConfig { seed, ..c.clone() };
                let clusters = fit_clusters(&self.clean, &c)?;
                generate_attack(&self.clean, self.dataset, &self.filter, &self.targets, &c, clusters.as_ref())
            }
        }
    }

    fn run(&self, spec: &AttackSpec, out: Option<&Path>) -> Result<(AttackRow, Vec<DecoyRow>)> {
        let seed = self.train.seed;
        let output = self.generate(spec)?;
        if let Some(dir) = out {
            let stem = format!("{}_seed{seed}", output.name);
            write_edits_tsv(&dir.join(format!("edits_{stem}.tsv")), &output.edits, &self.dataset.vocabulary)?;
            if !output.decoys.is_empty() {
                write_decoys_tsv(&dir.join(format!("decoys_{stem}.tsv")), &output.decoys, &self.dataset.vocabulary)?;
            }
        }
        let (poisoned_data, added) = self.dataset.merge_poison(&output.triples())?;
        let mut retrain = self.train.clone();
        if self.config.vary_retrain_seed {
            retrain.seed = seed.wrapping_add(1);
        }
        let (poisoned, report) = train(&poisoned_data, self.config.model, &retrain)?;
        let identical = if self.config.vary_retrain_seed {
            seedless_hash(&retrain) == seedless_hash(&self.train)
        } else {
            report.config_hash == self.clean_hash
        };
        if !identical {
            return Err(Error::ConfigMismatch {
                expected: self.clean_hash.clone(),
                found: report.config_hash,
            });
        }
        let poisoned_filter = FilterIndex::build(&poisoned_data);
        let (mrr, hits1) = target_metrics(&poisoned, &self.targets, &poisoned_filter)?;
        let row = AttackRow {
            seed,
            attack: output.name.clone(),
            n_edits: added,
            clean_mrr: self.clean_mrr,
            clean_hits1: self.clean_hits1,
            poisoned_mrr: mrr,
            poisoned_hits1: hits1,
            relative_change: (self.clean_mrr - mrr) / self.clean_mrr,
            seconds: output.seconds,
            error: None,
        };
        let decoys = decoy_report(&self.clean, &poisoned, &output.decoys, &self.filter)
            .into_iter()
            .map(|(side, n, c, p)| DecoyRow {
                seed,
                attack: output.name.clone(),
                side,
                n,
                clean_mrr: c,
                poisoned_mrr: p,
                relative_change: (p - c) / c,
            })
            .collect();
        Ok((row, decoys))
    }
}

/// Loads `config.dataset_dir` and runs [`run_pipeline_on`].
pub fn run_pipeline(config: &PipelineConfig) -> Result<ExperimentReport> {
    let dir = config
        .dataset_dir
        .as_ref()
        .ok_or_else(|| Error::Config("dataset directory not set".into()))?;
    let (dataset, stats) = load_dataset_dir(dir)?;
    log::info!(
        "loaded {} train / {} valid / {} test triples ({stats:?})",
        dataset.train.len(),
        dataset.valid.len(),
        dataset.test.len()
    );
    run_pipeline_on(&dataset, config)
}

/// Runs every attack for every seed. A failing attack row is recorded with its
/// error and the remaining rows still run.
pub fn run_pipeline_on(dataset: &Dataset, config: &PipelineConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).at(dir)?;
    }
    let filter = FilterIndex::build(dataset);
    let mut report = ExperimentReport::default();
    for &seed in &config.seeds {
        let train_cfg = TrainConfig {
            seed,
            ..config.train.clone()
        };
        let (clean, clean_report) = train(dataset, config.model, &train_cfg)?;
        let test = evaluate(&clean, &dataset.test, &filter)?;
        let targets: Vec<Triple> = select_targets(&clean, dataset, &filter, config.target_cutoff, config.target_rule)
            .into_iter()
            .map(|t| t.triple)
            .collect();
        log::info!("seed {seed}: {} targets; clean {}", targets.len(), test.summary());
        let (clean_mrr, clean_hits1) = if targets.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            target_metrics(&clean, &targets, &filter)?
        };
        report.clean.push(CleanRow {
            seed,
            test,
            n_targets: targets.len(),
            target_mrr: clean_mrr,
            target_hits1: clean_hits1,
        });
        let ctx = SeedContext {
            dataset,
            config,
            train: train_cfg,
            clean,
            clean_hash: clean_report.config_hash,
            filter: filter.clone(),
            targets,
            clean_mrr,
            clean_hits1,
        };
        for spec in &config.attacks {
            let result = if ctx.targets.is_empty() {
                Err(Error::EmptyEvaluation)
            } else {
                ctx.run(spec, config.out_dir.as_deref())
            };
            match result {
                Ok((row, decoys)) => {
                    log::info!(
                        "seed {seed} {}: {} edits, target MRR {:.4} -> {:.4}",
                        row.attack,
                        row.n_edits,
                        row.clean_mrr,
                        row.poisoned_mrr
                    );
                    report.attacks.push(row);
                    report.decoys.extend(decoys);
                }
                Err(e) => {
                    log::error!("seed {seed} {}: {e}", spec.name());
                    report.attacks.push(AttackRow {
                        seed,
                        attack: spec.name(),
                        n_edits: 0,
                        clean_mrr,
                        clean_hits1,
                        poisoned_mrr: f64::NAN,
                        poisoned_hits1: f64::NAN,
                        relative_change: f64::NAN,
                        seconds: 0.0,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }
    if let Some(dir) = &config.out_dir {
        write_report(dir, &report, config)?;
    }
    Ok(report)
}

pub fn write_report(dir: &Path, report: &ExperimentReport, config: &PipelineConfig) -> Result<()> {
    let files = [
        ("clean.tsv", report.clean_tsv()),
        ("attacks.tsv", report.attacks_tsv()),
        ("attacks_mean.tsv", report.means_tsv()),
        ("decoys.tsv", report.decoys_tsv()),
        ("runtime.tsv", report.runtime_tsv()),
    ];
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).at(&p)?;
    }
    let attacks: Vec<String> = config.attacks.iter().map(AttackSpec::name).collect();
    let seeds: Vec<String> = config.seeds.iter().map(u64::to_string).collect();
    write_manifest(
        dir,
        &config.train,
        &[
            ("command", "pipeline".to_string()),
            ("model", config.model.to_string()),
            ("attacks", attacks.join(",")),
            ("seeds", seeds.join(",")),
            ("target_cutoff", config.target_cutoff.to_string()),
        ],
    )
}

/// Writes `manifest.txt` with the train-config hash, versions and extra keys.
pub fn write_manifest(dir: &Path, train: &TrainConfig, extra: &[(&str, String)]) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "crate_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "train_config_hash={}", train.hash());
    for line in train.to_kv().lines() {
        let _ = writeln!(s, "train.{line}");
    }
    for (k, v) in extra {
        let _ = writeln!(s, "{k}={v}");
    }
    let p = dir.join("manifest.txt");
    fs::write(&p, s).at(&p)
}

/// Metrics of a single-side evaluation, used by the decoy report subcommand.
pub fn side_metrics(model: &Model, triples: &[Triple], filter: &FilterIndex, side: Side) -> Result<MetricsReport> {
    let ranks: Vec<usize> = triples.iter().map(|t| rank_triple(model, t, filter, side)).collect();
    MetricsReport::from_ranks(&ranks, RankSide::from(side))
}
