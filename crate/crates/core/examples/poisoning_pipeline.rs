//! Full experiment: clean training, target selection, attacks, retraining and reports.

use kge_poison::model::ModelKind;
use kge_poison::pipeline::{run_pipeline_on, AttackSpec, PipelineConfig};
use kge_poison::synth::{symmetric_kg, SynthConfig};
use kge_poison::train::TrainConfig;

pub fn run_example() -> anyhow::Result<()> {
    let dataset = symmetric_kg(&SynthConfig::default())?;
    let train = TrainConfig {
        epochs: 60,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let attacks = ["none", "sym_truth", "sym_cos", "random_n", "random_g1"]
        .iter()
        .map(|a| a.parse::<AttackSpec>())
        .collect::<Result<Vec<_>, _>>()?;
    let out = tempfile::tempdir()?;
    let mut config = PipelineConfig::new(ModelKind::DistMult, train, attacks);
    config.out_dir = Some(out.path().to_path_buf());

    let report = run_pipeline_on(&dataset, &config)?;
    print!("{}", report.means_tsv());
    print!("{}", report.decoys_tsv());
    let files: Vec<String> = std::fs::read_dir(out.path())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    println!("wrote {} files", files.len());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
