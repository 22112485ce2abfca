//! Algebraic search for inverse relations and composition pairs.

use kge_poison::attack::relations::{find_composition_pair, find_inverse_relation};
use kge_poison::model::{Model, ModelKind};

pub fn run_example() -> anyhow::Result<()> {
    for kind in ModelKind::ALL {
        let mut model = Model::init(kind, 10, 20, 8, 7);
        let w = model.relations.cols();

        // plant r7 as the exact inverse of r3
        let r3 = model.relation(3).to_vec();
        let inverse: Vec<f64> = match kind {
            ModelKind::TransE => r3.iter().map(|x| -x).collect(),
            ModelKind::DistMult => {
                let norm: f64 = r3.iter().map(|x| x * x).sum();
                r3.iter().map(|x| x / norm).collect()
            }
            // unconjugated complex dot: sum(re*re - im*im) = 1
            ModelKind::ComplEx => {
                let k = w / 2;
                let q: f64 = (0..k).map(|d| r3[d] * r3[d] - r3[k + d] * r3[k + d]).sum();
                r3.iter().map(|x| x / q).collect()
            }
        };
        model.relations.row_mut(7).copy_from_slice(&inverse);

        // plant r12 = r4 o r9
        let composed = kge_poison::attack::relations::compose(&model, model.relation(4), model.relation(9));
        model.relations.row_mut(12).copy_from_slice(&composed);

        let (inv, crit) = find_inverse_relation(&model, 3).unwrap();
        let (pair, dist) = find_composition_pair(&model, 12, true).unwrap();
        println!("{kind:<9} inverse of r3: r{inv} (criterion {crit:.1e}); r12 ~ r{} o r{} (distance {dist:.1e})", pair.0, pair.1);
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
