//! How much an attack lifts its decoy triples: decoy MRR before and after poisoning.

use kge_poison::attack::{generate_attack, AttackConfig, Heuristic, Pattern};
use kge_poison::eval::{select_targets, TargetRule};
use kge_poison::model::ModelKind;
use kge_poison::pipeline::decoy_report;
use kge_poison::synth::{symmetric_kg, SynthConfig};
use kge_poison::train::{train, TrainConfig};
use kge_poison::{FilterIndex, Triple};

pub fn run_example() -> anyhow::Result<()> {
    let dataset = symmetric_kg(&SynthConfig::default())?;
    let filter = FilterIndex::build(&dataset);
    let config = TrainConfig {
        epochs: 60,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let (clean, _) = train(&dataset, ModelKind::DistMult, &config)?;
    let targets: Vec<Triple> = select_targets(&clean, &dataset, &filter, 10, TargetRule::BothSides)
        .into_iter()
        .map(|t| t.triple)
        .collect();
    let out = generate_attack(
        &clean,
        &dataset,
        &filter,
        &targets,
        &AttackConfig::new(Pattern::Sym, Heuristic::Truth),
        None,
    )?;
    let (poisoned_data, _) = dataset.merge_poison(&out.triples())?;
    let (poisoned, _) = train(&poisoned_data, ModelKind::DistMult, &config)?;
    println!("side\tn\tclean_mrr\tpoisoned_mrr\tchange");
    for (side, n, c, p) in decoy_report(&clean, &poisoned, &out.decoys, &filter) {
        println!("{side}\t{n}\t{c:.4}\t{p:.4}\t{:+.1}%", 100.0 * (p - c) / c);
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
