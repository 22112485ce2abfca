//! Write a synthetic dataset directory usable with the command-line tool.
//!
//! `cargo run --example synthetic_dataset -- data/synth`

use std::path::Path;

use kge_poison::synth::{symmetric_kg, SynthConfig};

fn write_to(dir: &Path) -> anyhow::Result<()> {
    let dataset = symmetric_kg(&SynthConfig::default())?;
    dataset.write_dir(dir)?;
    println!(
        "{}: {} entities, {} relations, {}/{}/{} triples",
        dir.display(),
        dataset.n_entities(),
        dataset.n_relations(),
        dataset.train.len(),
        dataset.valid.len(),
        dataset.test.len()
    );
    Ok(())
}

pub fn run_example() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    write_to(dir.path())
}

fn main() -> anyhow::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => write_to(Path::new(&dir)),
        None => run_example(),
    }
}
