//! Inertia of k-means over trained entity embeddings across a grid of k.

use kge_poison::attack::kmeans::{cluster_preset, elbow_scan};
use kge_poison::model::ModelKind;
use kge_poison::synth::{symmetric_kg, SynthConfig};
use kge_poison::train::{train, TrainConfig};

pub fn run_example() -> anyhow::Result<()> {
    let dataset = symmetric_kg(&SynthConfig::default())?;
    let config = TrainConfig {
        epochs: 40,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let (model, _) = train(&dataset, ModelKind::DistMult, &config)?;
    let points: Vec<&[f64]> = model.entities.iter_rows().collect();
    println!("k\tinertia");
    for (k, inertia) in elbow_scan(&points, &[2, 5, 10, 20, 40, 80, 500], 0, 100) {
        println!("{k}\t{inertia:.3}");
    }
    println!("benchmark preset for WN18RR/DistMult: {:?}", cluster_preset("WN18RR", "DistMult"));
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
