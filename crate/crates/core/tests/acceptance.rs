//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL`/`SKIP` line before asserting.

mod common;

use std::collections::HashSet;
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;

use common::*;
use kge_poison::attack::audit::audit;
use kge_poison::attack::decoy::{
    attack_candidates, select_adversarial_entity_com, select_decoy_cos, select_decoy_rank, select_decoy_truth,
    PatternRelations, Step3Mode,
};
use kge_poison::attack::kmeans::EntityClusters;
use kge_poison::attack::logic::{and, ground_score, not, or};
use kge_poison::attack::relations::{compose, find_composition_pair, find_inverse_relation};
use kge_poison::attack::{
    fit_clusters, generate_attack, generate_random_baseline, AttackConfig, BaselineKind, Heuristic, Pattern,
};
use kge_poison::eval::{rank_triple, select_targets, TargetRule};
use kge_poison::graph::{load_dataset_dir, FilterIndex, Side, Triple};
use kge_poison::model::{CountingScorer, Model, ModelKind, Scorer};
use kge_poison::pipeline::{run_pipeline_on, AttackSpec, PipelineConfig};
use kge_poison::synth::{symmetric_kg, SynthConfig};
use kge_poison::train::{train, TrainConfig};

/// Serialises the criteria so that runtime limits are measured without contention.
static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(id: &str, name: &str, ok: bool, detail: String) {
    println!("{} criterion {id}: {name} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

#[test]
fn criterion_01_gradient_correctness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (k, kind) in ModelKind::ALL.into_iter().enumerate() {
        let mut rng = rng(100 + k as u64);
        for _ in 0..100 {
            let dim = rng.random_range(2..12);
            let model = random_model(&mut rng, kind, 6, 3, dim, false);
            let t = Triple::new(rng.random_range(0..6), rng.random_range(0..3), rng.random_range(0..6));
            let s = model.entity(t.subject).to_vec();
            let r = model.relation(t.relation).to_vec();
            let o = model.entity(t.object).to_vec();
            worst = worst.max(gradient_error(&model, &s, &r, &o, 1e-4));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "1",
        "gradient correctness",
        worst < 1e-4 && secs < 10.0,
        format!("max relative error {worst:.2e} over 300 instances, {secs:.2}s"),
    );
}

#[test]
fn criterion_02_ranking_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut checked = 0;
    let mut mismatches = 0;
    let mut ties = 0;
    for i in 0..20u64 {
        let mut rng = rng(200 + i);
        let n_e = rng.random_range(5..=50);
        let n_r = rng.random_range(1..=5);
        let dataset = random_kg(&mut rng, n_e, n_r, 3 * n_e, 10);
        let kind = ModelKind::ALL[i as usize % 3];
        let model = random_model(&mut rng, kind, n_e, n_r, 4, i % 2 == 0);
        let filter = FilterIndex::build(&dataset);
        let known = known_set(&dataset);
        for t in &dataset.test {
            for side in Side::BOTH {
                let fast = rank_triple(&model, t, &filter, side);
                let slow = brute_rank(&model, &known, t, side);
                let scores = model.score_all(t, side);
                let truth = scores[t.entity(side) as usize];
                ties += scores.iter().filter(|&&s| s == truth).count() - 1;
                checked += 1;
                if fast != slow {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "2",
        "ranking oracle",
        mismatches == 0 && secs < 30.0,
        format!("{checked} ranks, {mismatches} mismatches, {ties} tied scores exercised, {secs:.2}s"),
    );
}

#[test]
fn criterion_03_soft_logic_identities() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = rng(300);
    let mut failures = Vec::new();
    for i in 0..10_000 {
        let n_body = rng.random_range(1..=2);
        let body: Vec<f64> = (0..n_body).map(|_| rng.random_range(1e-9..1.0)).collect();
        let h: f64 = rng.random_range(1e-9..1.0);
        let b: f64 = body.iter().product();
        let g = ground_score(&body, h).value();
        if (g - (1.0 - b * (1.0 - h))).abs() > 1e-12 {
            failures.push(format!("#{i} closed form"));
        }
        if ground_score(&vec![1.0; n_body], h).value() != h {
            failures.push(format!("#{i} B=1"));
        }
        if ground_score(&[0.0], h).value() != 1.0 {
            failures.push(format!("#{i} B=0"));
        }
        let h2: f64 = rng.random_range(0.0..0.999);
        let lo: f64 = rng.random_range(0.0..0.999);
        let hi = rng.random_range(lo + 1e-6..=1.0);
        if ground_score(&[lo], h2).value() <= ground_score(&[hi], h2).value() {
            failures.push(format!("#{i} monotone"));
        }
        let (a, c) = (body[0], h);
        if (not(not(a)) - a).abs() > 1e-15 || (or(a, c) - (1.0 - (1.0 - a) * (1.0 - c))).abs() > 1e-15 {
            failures.push(format!("#{i} t-norm"));
        }
        if and(a, c) != a * c {
            failures.push(format!("#{i} and"));
        }
    }
    verdict(
        "3",
        "soft-logic identities",
        failures.is_empty(),
        format!("10000 tuples, {} failures {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    );
}

fn plant_inverse(model: &mut Model, r: u32, p: u32) {
    let e = model.relation(r).to_vec();
    let planted: Vec<f64> = match model.kind {
        ModelKind::TransE => e.iter().map(|x| -x).collect(),
        ModelKind::DistMult => {
            let q: f64 = e.iter().map(|x| x * x).sum();
            e.iter().map(|x| x / q).collect()
        }
        ModelKind::ComplEx => {
            // real-only partner: sum(re_p * re_r) = 1 and im_p = 0
            let k = model.dim;
            let q: f64 = e[..k].iter().map(|x| x * x).sum();
            let mut v: Vec<f64> = e[..k].iter().map(|x| x / q).collect();
            v.extend(std::iter::repeat_n(0.0, k));
            v
        }
    };
    model.relations.row_mut(p as usize).copy_from_slice(&planted);
}

#[test]
fn criterion_04_step1_recovery() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut inverse_hits = 0;
    let mut inverse_trials = 0;
    let mut pair_hits = 0;
    let mut pair_trials = 0;
    let mut oracle_mismatch = 0;
    for trial in 0..100u64 {
        let mut rng = rng(400 + trial);
        for kind in ModelKind::ALL {
            let n_r = rng.random_range(20..30);
            let mut model = random_model(&mut rng, kind, 4, n_r, 6, false);
            let r = rng.random_range(0..n_r as u32);
            let p = (r + rng.random_range(1..n_r as u32)) % n_r as u32;
            plant_inverse(&mut model, r, p);
            inverse_trials += 1;
            if find_inverse_relation(&model, r).map(|x| x.0) == Some(p) {
                inverse_hits += 1;
            }

            let mut model = random_model(&mut rng, kind, 4, n_r, 6, false);
            let a = rng.random_range(0..n_r as u32);
            let b = rng.random_range(0..n_r as u32);
            let mut t = rng.random_range(0..n_r as u32);
            while t == a || t == b {
                t = (t + 1) % n_r as u32;
            }
            let c = compose(&model, model.relation(a), model.relation(b));
            model.relations.row_mut(t as usize).copy_from_slice(&c);
            pair_trials += 1;
            let found = find_composition_pair(&model, t, false).unwrap();
            // composition commutes in all three algebras, so the planted pair is unordered
            if found.0 == (a.min(b), a.max(b)) && found.1 == 0.0 {
                pair_hits += 1;
            }

            let model = random_model(&mut rng, kind, 4, 10, 5, false);
            let r = rng.random_range(0..10);
            let (pair, dist) = find_composition_pair(&model, r, false).unwrap();
            let (opair, odist) = oracle_composition_pair(&model, r);
            if pair != opair || (dist - odist).abs() > 1e-12 {
                oracle_mismatch += 1;
            }
        }
    }
    verdict(
        "4",
        "step-1 recovery",
        inverse_hits == inverse_trials && pair_hits == pair_trials && oracle_mismatch == 0,
        format!(
            "inverse {inverse_hits}/{inverse_trials}, planted pair {pair_hits}/{pair_trials}, oracle mismatches {oracle_mismatch}"
        ),
    );
}

#[test]
fn criterion_05_heuristic_oracles() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut checks = 0;
    let mut failures: Vec<String> = Vec::new();
    for i in 0..12u64 {
        let mut rng = rng(500 + i);
        let kind = ModelKind::ALL[i as usize % 3];
        let n_e = rng.random_range(10..=50);
        let n_r = rng.random_range(2..=4);
        let dataset = random_kg(&mut rng, n_e, n_r, 2 * n_e, 6);
        let model = random_model(&mut rng, kind, n_e, n_r, 4, false);
        let filter = FilterIndex::build(&dataset);
        let known = known_set(&dataset);
        let train: HashSet<Triple> = dataset.train_set();
        let clusters = EntityClusters::fit(&model, n_e, 0).unwrap();
        for t in &dataset.test {
            let ri = find_inverse_relation(&model, t.relation).unwrap().0;
            let (r1, r2) = find_composition_pair(&model, t.relation, false).unwrap().0;
            for side in Side::BOTH {
                let mut expect = |what: &str, ok: bool| {
                    checks += 1;
                    if !ok {
                        failures.push(format!("kg {i} {t} {side} {what}"));
                    }
                };
                let sym = attack_candidates(t, side, PatternRelations::Symmetry, &filter, n_e);
                let plain = attack_candidates(t, side, PatternRelations::Inversion(ri), &filter, n_e);
                expect("sym candidates", sym == brute_candidates(&known, t, side, n_e, true));
                expect("candidates", plain == brute_candidates(&known, t, side, n_e, false));

                let got = select_decoy_truth(&model, t, side, PatternRelations::Symmetry, &sym, None);
                let want = oracle_truth_single(&model, t, side, t.relation, &sym);
                expect("truth sym", got.map(|d| (d.score, d.entity)) == want);

                let got = select_decoy_truth(&model, t, side, PatternRelations::Inversion(ri), &plain, None);
                let want = oracle_truth_single(&model, t, side, ri, &plain);
                expect("truth inv", got.map(|d| (d.score, d.entity)) == want);

                let got = select_decoy_truth(&model, t, side, PatternRelations::Composition(r1, r2), &plain, Some(&clusters));
                let want = oracle_truth_com(&model, t, side, r1, r2, &plain);
                expect("truth com", got.map(|d| (d.score, d.entity)) == want);

                let got = select_decoy_rank(&model, t, side, &plain);
                expect("rank", got.map(|d| d.entity) == oracle_rank(&model, t, side, &plain));

                let got = select_decoy_cos(&model, t, side, &plain);
                let want = oracle_cos(&model, t, side, &plain);
                let same = match (got, want) {
                    (Some(d), Some((v, e))) => d.entity == e && (d.score - v).abs() < 1e-12,
                    (None, None) => true,
                    _ => false,
                };
                expect("cos", same);

                if let Some(decoy) = select_decoy_rank(&model, t, side, &plain).or(select_decoy_cos(&model, t, side, &plain)) {
                    for (mode, literal) in [(Step3Mode::Literal, true), (Step3Mode::Body, false)] {
                        let got = select_adversarial_entity_com(&model, &decoy, (r1, r2), mode, &train);
                        let want = oracle_step3(&model, t, side, decoy.entity, r1, r2, literal, &train);
                        expect(mode.as_str(), got == want);
                    }
                }
            }
        }
    }
    verdict(
        "5",
        "heuristic oracles",
        failures.is_empty(),
        format!("{checks} comparisons, {} mismatches {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    );
}

#[test]
fn criterion_06_threat_model_audit() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let dataset = symmetric_kg(&SynthConfig::default()).unwrap();
    assert_eq!(dataset.n_entities(), 200);
    let filter = FilterIndex::build(&dataset);
    let config = TrainConfig {
        epochs: 30,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let mut attacks = 0;
    let mut edits = 0;
    let mut violations = Vec::new();
    for kind in ModelKind::ALL {
        let (model, _) = train(&dataset, kind, &config).unwrap();
        let targets: Vec<Triple> = select_targets(&model, &dataset, &filter, 10, TargetRule::EitherSide)
            .into_iter()
            .map(|t| t.triple)
            .chain(dataset.test.iter().copied())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        for pattern in Pattern::ALL {
            for heuristic in Heuristic::ALL {
                for mode in [Step3Mode::Literal, Step3Mode::Body] {
                    if pattern != Pattern::Com && mode == Step3Mode::Body {
                        continue;
                    }
                    let mut cfg = AttackConfig::new(pattern, heuristic);
                    cfg.clusters_k = 20;
                    cfg.step3_mode = mode;
                    let clusters = fit_clusters(&model, &cfg).unwrap();
                    let out = generate_attack(&model, &dataset, &filter, &targets, &cfg, clusters.as_ref()).unwrap();
                    attacks += 1;
                    edits += out.n_triples();
                    violations.extend(audit(&dataset, &out, Some(pattern), 1).into_iter().map(|v| format!("{kind} {}: {v}", out.name)));
                }
            }
        }
        for b in BaselineKind::ALL {
            let out = generate_random_baseline(&dataset, &targets, b, 7);
            attacks += 1;
            edits += out.n_triples();
            violations.extend(audit(&dataset, &out, None, b.per_side()).into_iter().map(|v| format!("{kind} {}: {v}", out.name)));
        }
    }
    verdict(
        "6",
        "threat-model audit",
        violations.is_empty() && edits > 0,
        format!("{attacks} attacks, {edits} edit triples, {} violations {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()),
    );
}

#[test]
fn criterion_07_end_to_end_direction() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let dataset = symmetric_kg(&SynthConfig::default()).unwrap();
    let train_cfg = TrainConfig {
        dim: 32,
        epochs: 200,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let attacks: Vec<AttackSpec> = ["sym_truth", "sym_cos", "random_n", "random_g1"]
        .iter()
        .map(|a| a.parse().unwrap())
        .collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [ModelKind::DistMult, ModelKind::TransE] {
        let mut cfg = PipelineConfig::new(kind, train_cfg.clone(), attacks.clone());
        cfg.seeds = vec![0, 1, 2];
        let report = run_pipeline_on(&dataset, &cfg).unwrap();
        let mean = |a: &str| report.mean_of(a).map_or(f64::NAN, |m| m.relative_change);
        let sym = mean("Sym_truth").min(mean("Sym_cos"));
        let random = mean("Random_n").max(mean("Random_g1"));
        let margin = sym - random;
        ok &= margin >= 0.05;
        lines.push(format!(
            "{kind}: Sym_truth {:.3} Sym_cos {:.3} Random_n {:.3} Random_g1 {:.3} margin {margin:.3}",
            mean("Sym_truth"),
            mean("Sym_cos"),
            mean("Random_n"),
            mean("Random_g1")
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "7",
        "end-to-end direction",
        ok && secs < 900.0,
        format!("{}; {secs:.0}s", lines.join("; ")),
    );
}

#[test]
fn criterion_08_zero_edit_identity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let dataset = symmetric_kg(&SynthConfig::default()).unwrap();
    let train_cfg = TrainConfig {
        epochs: 40,
        learning_rate: 0.01,
        seed: 11,
        ..TrainConfig::default()
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in ModelKind::ALL {
        let cfg = PipelineConfig::new(kind, train_cfg.clone(), vec![AttackSpec::Empty]);
        let report = run_pipeline_on(&dataset, &cfg).unwrap();
        let row = &report.attacks[0];
        let same = row.error.is_none()
            && row.n_edits == 0
            && row.clean_mrr.to_bits() == row.poisoned_mrr.to_bits()
            && row.clean_hits1.to_bits() == row.poisoned_hits1.to_bits();
        ok &= same;
        lines.push(format!("{kind} clean {} poisoned {}", row.clean_mrr, row.poisoned_mrr));
    }
    verdict("8", "zero-edit identity", ok, lines.join("; "));
}

#[test]
fn criterion_09_cost_envelope() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut lines = Vec::new();
    let mut ok = true;
    for n_e in [100usize, 400, 1600] {
        let mut rng = rng(900 + n_e as u64);
        let dataset = random_kg(&mut rng, n_e, 4, 2 * n_e, 5);
        let model = random_model(&mut rng, ModelKind::DistMult, n_e, 4, 8, false);
        let filter = FilterIndex::build(&dataset);
        let k = 10;
        let clusters = EntityClusters::fit(&model, k, 0).unwrap();
        let counter = CountingScorer::new(&model);
        let (mut single, mut com) = (0u64, 0u64);
        for t in &dataset.test {
            let ri = find_inverse_relation(&model, t.relation).unwrap().0;
            let (r1, r2) = find_composition_pair(&model, t.relation, false).unwrap().0;
            for side in Side::BOTH {
                let rels = [PatternRelations::Symmetry, PatternRelations::Inversion(ri)];
                for rel in rels {
                    let cands = attack_candidates(t, side, rel, &filter, n_e);
                    for h in Heuristic::ALL {
                        counter.reset();
                        match h {
                            Heuristic::Truth => {
                                select_decoy_truth(&counter, t, side, rel, &cands, None);
                            }
                            Heuristic::Rank => {
                                select_decoy_rank(&counter, t, side, &cands);
                            }
                            Heuristic::Cos => {
                                select_decoy_cos(counter.model(), t, side, &cands);
                            }
                        }
                        single = single.max(counter.calls());
                    }
                }
                let cands = attack_candidates(t, side, PatternRelations::Composition(r1, r2), &filter, n_e);
                counter.reset();
                select_decoy_truth(&counter, t, side, PatternRelations::Composition(r1, r2), &cands, Some(&clusters));
                com = com.max(counter.calls());
            }
        }
        let single_ok = single <= 4 * n_e as u64;
        let com_ok = com <= 4 * (k * n_e) as u64;
        ok &= single_ok && com_ok;
        lines.push(format!(
            "|E|={n_e}: sym/inv {single} ({:.2}|E|), com {com} ({:.2}k|E|)",
            single as f64 / n_e as f64,
            com as f64 / (k * n_e) as f64
        ));
    }
    verdict("9", "cost envelope", ok, lines.join("; "));
}

#[test]
fn criterion_10_full_scale_smoke() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let Some(dir) = std::env::var_os("KGE_WN18RR_DIR") else {
        println!("SKIP criterion 10: full-scale smoke (optional; set KGE_WN18RR_DIR to a WN18RR directory)");
        return;
    };
    let (dataset, _) = load_dataset_dir(std::path::Path::new(&dir)).unwrap();
    let counts = (
        dataset.n_entities(),
        dataset.n_relations(),
        dataset.train.len(),
        dataset.valid.len(),
        dataset.test.len(),
    );
    let mut cfg = PipelineConfig::new(
        ModelKind::DistMult,
        TrainConfig::benchmark(),
        vec!["sym_cos".parse().unwrap(), "random_n".parse().unwrap()],
    );
    cfg.seeds = vec![0];
    let report = run_pipeline_on(&dataset, &cfg).unwrap();
    let sym = report.mean_of("Sym_cos").map_or(f64::NAN, |m| m.relative_change);
    let random = report.mean_of("Random_n").map_or(f64::NAN, |m| m.relative_change);
    let ok = counts == (40559, 11, 86835, 2824, 2924) && sym > random;
    println!(
        "{} criterion 10 (optional): full-scale smoke (counts {counts:?}, Sym_cos {sym:.3}, Random_n {random:.3})",
        if ok { "PASS" } else { "FAIL" }
    );
}
