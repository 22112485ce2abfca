//! Random neighbourhood and global edit baselines.

use kge_poison::attack::audit::audit;
use kge_poison::attack::{generate_random_baseline, BaselineKind};
use kge_poison::synth::{symmetric_kg, SynthConfig};

pub fn run_example() -> anyhow::Result<()> {
    let dataset = symmetric_kg(&SynthConfig::default())?;
    let targets = &dataset.test[..10];
    for kind in BaselineKind::ALL {
        let out = generate_random_baseline(&dataset, targets, kind, 42);
        let again = generate_random_baseline(&dataset, targets, kind, 42);
        let violations = audit(&dataset, &out, None, kind.per_side());
        println!(
            "{:<10} {} edit triples, {} violations, reproducible: {}",
            out.name,
            out.n_triples(),
            violations.len(),
            out.edits == again.edits
        );
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
