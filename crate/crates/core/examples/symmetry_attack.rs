//! Symmetry attacks with every decoy heuristic, checked against the threat model.

use kge_poison::attack::audit::audit;
use kge_poison::attack::{generate_attack, AttackConfig, Heuristic, Pattern};
use kge_poison::eval::{select_targets, TargetRule};
use kge_poison::model::ModelKind;
use kge_poison::synth::{symmetric_kg, SynthConfig};
use kge_poison::train::{train, TrainConfig};
use kge_poison::{FilterIndex, Triple};

pub fn run_example() -> anyhow::Result<()> {
    let dataset = symmetric_kg(&SynthConfig::default())?;
    let filter = FilterIndex::build(&dataset);
    let config = TrainConfig {
        epochs: 50,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let (model, _) = train(&dataset, ModelKind::DistMult, &config)?;
    let targets: Vec<Triple> = select_targets(&model, &dataset, &filter, 10, TargetRule::BothSides)
        .into_iter()
        .map(|t| t.triple)
        .collect();
    println!("{} targets", targets.len());

    for heuristic in Heuristic::ALL {
        let attack = AttackConfig::new(Pattern::Sym, heuristic);
        let out = generate_attack(&model, &dataset, &filter, &targets, &attack, None)?;
        let violations = audit(&dataset, &out, Some(Pattern::Sym), 1);
        println!(
            "{:<10} {} edits, {} decoys, {} skipped, {} violations, {:.3}s",
            out.name,
            out.n_triples(),
            out.decoys.len(),
            out.skipped.len(),
            violations.len(),
            out.seconds
        );
        if let Some(edit) = out.edits.first() {
            let decoy = out.decoys.iter().find(|d| d.target == edit.target && d.side == edit.side).unwrap();
            println!("           e.g. target {} decoy {} adds {:?}", edit.target, decoy.decoy_triple(), edit.triples);
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
