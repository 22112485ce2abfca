//! Composition attacks: clustered soft-truth decoys and both intermediate-entity modes.

use kge_poison::attack::audit::audit;
use kge_poison::attack::{fit_clusters, generate_attack, AttackConfig, Heuristic, Pattern, Step3Mode};
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
    let (model, _) = train(&dataset, ModelKind::ComplEx, &config)?;
    let targets: Vec<Triple> = select_targets(&model, &dataset, &filter, 10, TargetRule::EitherSide)
        .into_iter()
        .map(|t| t.triple)
        .collect();

    for heuristic in Heuristic::ALL {
        for mode in [Step3Mode::Literal, Step3Mode::Body] {
            let mut attack = AttackConfig::new(Pattern::Com, heuristic);
            attack.clusters_k = 20;
            attack.step3_mode = mode;
            let clusters = fit_clusters(&model, &attack)?;
            let out = generate_attack(&model, &dataset, &filter, &targets, &attack, clusters.as_ref())?;
            let violations = audit(&dataset, &out, Some(Pattern::Com), 2);
            println!(
                "{:<10} step3={:<8} {} edit triples for {} targets, {} violations, {:.3}s",
                out.name,
                mode.as_str(),
                out.n_triples(),
                targets.len(),
                violations.len(),
                out.seconds
            );
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
