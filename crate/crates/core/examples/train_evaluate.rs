//! Train each model family on a small synthetic graph, evaluate filtered
//! ranking, and round-trip the checkpoint.

use kge_poison::eval::evaluate_sides;
use kge_poison::model::{load_checkpoint, save_checkpoint, ModelKind};
use kge_poison::synth::{symmetric_kg, SynthConfig};
use kge_poison::train::{train, TrainConfig};
use kge_poison::FilterIndex;

pub fn run_example() -> anyhow::Result<()> {
    let dataset = symmetric_kg(&SynthConfig {
        n_entities: 100,
        communities: 10,
        held_out: 20,
        ..SynthConfig::default()
    })?;
    let filter = FilterIndex::build(&dataset);
    let config = TrainConfig {
        dim: 16,
        epochs: 60,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir()?;
    for kind in ModelKind::ALL {
        let (model, report) = train(&dataset, kind, &config)?;
        let [_, _, both] = evaluate_sides(&model, &dataset.test, &filter)?;
        println!(
            "{kind:<9} loss {:.4} -> {:.4}  {}",
            report.epoch_losses[0],
            report.epoch_losses.last().unwrap(),
            both.summary()
        );

        let path = dir.path().join(kind.as_str());
        save_checkpoint(&path, &model, &report.config_hash)?;
        let (restored, meta) = load_checkpoint(&path)?;
        assert_eq!(meta.train_config_hash, config.hash());
        let drift = model
            .entities
            .values()
            .iter()
            .zip(restored.entities.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("          checkpoint max drift {drift:.2e} (f32 storage)");
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
