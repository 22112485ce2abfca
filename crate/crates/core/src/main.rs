use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kge_poison::attack::{
    fit_clusters, generate_attack, generate_random_baseline, read_decoys_tsv, read_edits_tsv, write_decoys_tsv,
    write_edits_tsv, AttackConfig, AttackOutput, BaselineKind,
};
use kge_poison::config::read_kv;
use kge_poison::eval::{evaluate_sides, read_targets_tsv, select_targets, write_targets_tsv, TargetRule};
use kge_poison::graph::{load_dataset_dir, Dataset, FilterIndex};
use kge_poison::model::{load_checkpoint, save_checkpoint, Model, ModelKind};
use kge_poison::pipeline::{decoy_report, run_pipeline, write_manifest, AttackSpec, PipelineConfig};
use kge_poison::train::{train_with_progress, TrainConfig};

#[derive(Parser)]
#[command(name = "kge-poison", version, about = "Train KGE models and poison them with pattern-based additions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and save a checkpoint under OUT/model.
    Train(Common),
    /// Filtered link prediction metrics on the test split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Test triples ranked within the cutoff.
    SelectTargets {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        cutoff: Option<usize>,
        /// Require both ranks within the cutoff, or either.
        #[arg(long, value_parser = ["both", "either"])]
        rule: Option<String>,
    },
    /// Generate adversarial edits for the selected targets.
    Attack {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        attack: AttackArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// Merge an edits file into the training split and write the new dataset.
    Poison {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        edits: PathBuf,
    },
    /// Train clean, attack, retrain and report, for every attack and seed.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        attack: AttackArgs,
        /// Comma-separated attacks, e.g. sym_truth,sym_cos,random_n.
        #[arg(long)]
        attacks: Option<String>,
        /// Comma-separated seeds.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        vary_retrain_seed: bool,
    },
    /// Decoy-triple MRR under a clean and a poisoned model.
    DecoyReport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        poisoned: PathBuf,
        #[arg(long)]
        decoys: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    #[arg(long, value_parser = ["distmult", "complex", "transe"])]
    model: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, value_parser = ["sym", "inv", "com"])]
    pattern: Option<String>,
    #[arg(long, value_parser = ["truth", "rank", "cos"])]
    heuristic: Option<String>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, value_parser = ["literal", "body"])]
    step3_mode: Option<String>,
    #[arg(long, value_parser = ["random_n", "random_g1", "random_g2"])]
    baseline: Option<String>,
}

/// Flags layered over the config file.
struct Settings {
    kv: BTreeMap<String, String>,
}

impl Settings {
    fn new(common: &Common) -> Result<Self> {
        let mut kv = match &common.config {
            Some(p) => read_kv(p)?,
            None => BTreeMap::new(),
        };
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        };
        put("dataset_dir", common.dataset_dir.as_ref().map(|p| p.display().to_string()));
        put("model", common.model.clone());
        put("dim", common.dim.map(|v| v.to_string()));
        put("epochs", common.epochs.map(|v| v.to_string()));
        put("learning_rate", common.lr.map(|v| v.to_string()));
        put("seed", common.seed.map(|v| v.to_string()));
        put("out", common.out.as_ref().map(|p| p.display().to_string()));
        if let Some(lr) = kv.remove("lr") {
            kv.entry("learning_rate".into()).or_insert(lr);
        }
        Ok(Self { kv })
    }

    fn with_attack(mut self, a: &AttackArgs) -> Self {
        let pairs = [
            ("pattern", a.pattern.clone()),
            ("heuristic", a.heuristic.clone()),
            ("clusters", a.clusters.map(|v| v.to_string())),
            ("step3_mode", a.step3_mode.clone()),
            ("baseline", a.baseline.clone()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                self.kv.insert(k.to_string(), v);
            }
        }
        self
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.kv.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("bad value for {key}: {e}")))
            .transpose()
    }

    fn out(&self) -> PathBuf {
        PathBuf::from(self.get("out").unwrap_or("out"))
    }

    fn dataset(&self) -> Result<Dataset> {
        let dir = self.get("dataset_dir").context("--dataset-dir is required")?;
        let (d, stats) = load_dataset_dir(Path::new(dir))?;
        log::info!(
            "{dir}: {} entities, {} relations, {}/{}/{} triples ({stats:?})",
            d.n_entities(),
            d.n_relations(),
            d.train.len(),
            d.valid.len(),
            d.test.len()
        );
        Ok(d)
    }

    fn model_kind(&self) -> Result<ModelKind> {
        Ok(self.parse("model")?.unwrap_or(ModelKind::DistMult))
    }

    fn train_config(&self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        for (k, v) in &self.kv {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn attack_config(&self) -> Result<AttackConfig> {
        let pattern = self.parse("pattern")?.context("--pattern or --baseline is required")?;
        let mut c = AttackConfig::new(pattern, self.parse("heuristic")?.context("--heuristic is required")?);
        if let Some(k) = self.parse("clusters")? {
            c.clusters_k = k;
        }
        if let Some(m) = self.parse("step3_mode")? {
            c.step3_mode = m;
        }
        c.seed = self.parse("seed")?.unwrap_or(0);
        c.validate()?;
        Ok(c)
    }

    fn checkpoint(&self, explicit: Option<&PathBuf>) -> PathBuf {
        explicit.cloned().unwrap_or_else(|| self.out().join("model"))
    }
}

fn load_model(dir: &Path, dataset: &Dataset) -> Result<Model> {
    let (model, meta) = load_checkpoint(dir).with_context(|| format!("loading checkpoint {}", dir.display()))?;
    if meta.n_entities != dataset.n_entities() || meta.n_relations != dataset.n_relations() {
        bail!(
            "checkpoint has {} entities / {} relations, dataset has {} / {}",
            meta.n_entities,
            meta.n_relations,
            dataset.n_entities(),
            dataset.n_relations()
        );
    }
    Ok(model)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_train(s: &Settings) -> Result<()> {
    let dataset = s.dataset()?;
    let kind = s.model_kind()?;
    let cfg = s.train_config()?;
    let out = s.out();
    create_out(&out)?;
    let every = (cfg.epochs / 10).max(1);
    let (model, report) = train_with_progress(&dataset, kind, &cfg, |epoch, loss| {
        if epoch % every == 0 {
            log::info!("epoch {epoch} loss {loss:.6}");
        }
    })?;
    save_checkpoint(&out.join("model"), &model, &report.config_hash)?;
    report.write_tsv(&out.join("train_log.tsv"))?;
    write_manifest(&out, &cfg, &[("command", "train".into()), ("model", kind.to_string())])?;
    println!(
        "trained {kind} in {:.1}s, final loss {:.6}",
        report.seconds,
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_evaluate(s: &Settings, checkpoint: Option<&PathBuf>) -> Result<()> {
    let dataset = s.dataset()?;
    let model = load_model(&s.checkpoint(checkpoint), &dataset)?;
    let filter = FilterIndex::build(&dataset);
    let reports = evaluate_sides(&model, &dataset.test, &filter)?;
    let out = s.out();
    create_out(&out)?;
    let mut tsv = String::from("metric\tside\tvalue\n");
    for r in &reports {
        tsv.push_str(&r.tsv_rows());
        println!("{}", r.summary());
    }
    fs::write(out.join("metrics.tsv"), tsv)?;
    write_manifest(&out, &s.train_config()?, &[("command", "evaluate".into())])?;
    Ok(())
}

fn cmd_select_targets(s: &Settings, checkpoint: Option<&PathBuf>, cutoff: Option<usize>, rule: Option<&str>) -> Result<()> {
    let dataset = s.dataset()?;
    let model = load_model(&s.checkpoint(checkpoint), &dataset)?;
    let filter = FilterIndex::build(&dataset);
    let cutoff = cutoff.or(s.parse("cutoff")?).unwrap_or(10);
    let rule = match rule.or(s.get("rule")) {
        Some("either") => TargetRule::EitherSide,
        _ => TargetRule::BothSides,
    };
    let targets = select_targets(&model, &dataset, &filter, cutoff, rule);
    let out = s.out();
    create_out(&out)?;
    write_targets_tsv(&out.join("targets.tsv"), &targets, &dataset.vocabulary)?;
    println!("{} of {} test triples selected as targets", targets.len(), dataset.test.len());
    Ok(())
}

fn cmd_attack(s: &Settings, checkpoint: Option<&PathBuf>, targets: Option<&PathBuf>) -> Result<()> {
    let dataset = s.dataset()?;
    let model = load_model(&s.checkpoint(checkpoint), &dataset)?;
    let out = s.out();
    let targets_path = targets.cloned().unwrap_or_else(|| out.join("targets.tsv"));
    let targets = read_targets_tsv(&targets_path, &dataset.vocabulary)
        .with_context(|| format!("reading targets from {}", targets_path.display()))?;
    let filter = FilterIndex::build(&dataset);
    let output: AttackOutput = match s.parse::<BaselineKind>("baseline")? {
        Some(b) => generate_random_baseline(&dataset, &targets, b, s.parse("seed")?.unwrap_or(0)),
        None => {
            let cfg = s.attack_config()?;
            let clusters = fit_clusters(&model, &cfg)?;
            generate_attack(&model, &dataset, &filter, &targets, &cfg, clusters.as_ref())?
        }
    };
    create_out(&out)?;
    write_edits_tsv(&out.join("edits.tsv"), &output.edits, &dataset.vocabulary)?;
    write_decoys_tsv(&out.join("decoys.tsv"), &output.decoys, &dataset.vocabulary)?;
    fs::write(
        out.join("runtime.tsv"),
        format!("attack\tseconds\n{}\t{}\n", output.name, output.seconds),
    )?;
    write_manifest(&out, &s.train_config()?, &[("command", "attack".into()), ("attack", output.name.clone())])?;
    println!(
        "{}: {} edit triples for {} targets ({} target sides skipped) in {:.3}s",
        output.name,
        output.n_triples(),
        targets.len(),
        output.skipped.len(),
        output.seconds
    );
    Ok(())
}

fn cmd_poison(s: &Settings, edits: &Path) -> Result<()> {
    let dataset = s.dataset()?;
    let triples = read_edits_tsv(edits, &dataset.vocabulary)?;
    let (poisoned, added) = dataset.merge_poison(&triples)?;
    let dir = s.out().join("poisoned");
    poisoned.write_dir(&dir)?;
    println!("added {added} of {} edit triples; wrote {}", triples.len(), dir.display());
    Ok(())
}

fn cmd_pipeline(s: &Settings, attacks: Option<&str>, seeds: Option<&str>, vary: bool) -> Result<()> {
    let train = s.train_config()?;
    let list = attacks.or(s.get("attacks")).unwrap_or("sym_truth,sym_rank,sym_cos,random_n,random_g1");
    let mut specs = Vec::new();
    for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        let mut spec: AttackSpec = name.parse()?;
        if let AttackSpec::Pattern(c) = &mut spec {
            if let Some(k) = s.parse("clusters")? {
                c.clusters_k = k;
            }
            if let Some(m) = s.parse("step3_mode")? {
                c.step3_mode = m;
            }
        }
        specs.push(spec);
    }
    let mut cfg = PipelineConfig::new(s.model_kind()?, train, specs);
    cfg.dataset_dir = Some(PathBuf::from(s.get("dataset_dir").context("--dataset-dir is required")?));
    cfg.out_dir = Some(s.out());
    if let Some(list) = seeds.or(s.get("seeds")) {
        cfg.seeds = list
            .split(',')
            .map(|x| x.trim().parse::<u64>().with_context(|| format!("bad seed {x:?}")))
            .collect::<Result<_>>()?;
    }
    if let Some(c) = s.parse("cutoff")? {
        cfg.target_cutoff = c;
    }
    cfg.vary_retrain_seed = vary;
    let report = run_pipeline(&cfg)?;
    print!("{}", report.means_tsv());
    Ok(())
}

fn cmd_decoy_report(s: &Settings, clean: &Path, poisoned: &Path, decoys: &Path) -> Result<()> {
    let dataset = s.dataset()?;
    let clean = load_model(clean, &dataset)?;
    let poisoned = load_model(poisoned, &dataset)?;
    let decoys = read_decoys_tsv(decoys, &dataset.vocabulary)?;
    let filter = FilterIndex::build(&dataset);
    let mut tsv = String::from("side\tn\tclean_mrr\tpoisoned_mrr\trelative_change\n");
    for (side, n, c, p) in decoy_report(&clean, &poisoned, &decoys, &filter) {
        tsv.push_str(&format!("{side}\t{n}\t{c}\t{p}\t{}\n", (p - c) / c));
    }
    let out = s.out();
    create_out(&out)?;
    fs::write(out.join("decoy_report.tsv"), &tsv)?;
    print!("{tsv}");
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Train(c) => cmd_train(&Settings::new(c)?),
        Command::Evaluate { common, checkpoint } => cmd_evaluate(&Settings::new(common)?, checkpoint.as_ref()),
        Command::SelectTargets {
            common,
            checkpoint,
            cutoff,
            rule,
        } => cmd_select_targets(&Settings::new(common)?, checkpoint.as_ref(), *cutoff, rule.as_deref()),
        Command::Attack {
            common,
            attack,
            checkpoint,
            targets,
        } => cmd_attack(&Settings::new(common)?.with_attack(attack), checkpoint.as_ref(), targets.as_ref()),
        Command::Poison { common, edits } => cmd_poison(&Settings::new(common)?, edits),
        Command::Pipeline {
            common,
            attack,
            attacks,
            seeds,
            vary_retrain_seed,
        } => cmd_pipeline(
            &Settings::new(common)?.with_attack(attack),
            attacks.as_deref(),
            seeds.as_deref(),
            *vary_retrain_seed,
        ),
        Command::DecoyReport {
            common,
            clean,
            poisoned,
            decoys,
        } => cmd_decoy_report(&Settings::new(common)?, clean, poisoned, decoys),
    }
}
