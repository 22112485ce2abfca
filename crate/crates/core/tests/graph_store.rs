mod common;

use std::collections::HashSet;
use std::fs;

use proptest::prelude::*;

use kge_poison::graph::{load_dataset_dir, Dataset, FilterIndex, Side, Triple, Vocabulary};

fn named(n_e: usize, n_r: usize, triples: &[(usize, usize, usize)]) -> Vec<Triple> {
    triples
        .iter()
        .map(|&(s, r, o)| Triple::new((s % n_e) as u32, (r % n_r) as u32, (o % n_e) as u32))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_load_preserves_named_triples(
        n_e in 2usize..30,
        n_r in 1usize..5,
        raw in prop::collection::vec((0usize..100, 0usize..100, 0usize..100), 1..80),
        split in 0.5f64..1.0,
    ) {
        let triples = named(n_e, n_r, &raw);
        let cut = ((triples.len() as f64) * split).ceil() as usize;
        let (train, rest) = triples.split_at(cut);
        let (valid, test) = rest.split_at(rest.len() / 2);
        let d = Dataset::from_parts(Vocabulary::synthetic(n_e, n_r), train.to_vec(), valid.to_vec(), test.to_vec()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        d.write_dir(dir.path()).unwrap();
        let (back, stats) = load_dataset_dir(dir.path()).unwrap();

        let names = |ds: &Dataset, ts: &[Triple]| -> Vec<(String, String, String)> {
            ts.iter().map(|t| (
                ds.vocabulary.entity_name(t.subject).unwrap().to_string(),
                ds.vocabulary.relation_name(t.relation).unwrap().to_string(),
                ds.vocabulary.entity_name(t.object).unwrap().to_string(),
            )).collect()
        };
        prop_assert_eq!(names(&back, &back.train), names(&d, &d.train));
        prop_assert_eq!(stats.duplicate_train, 0);
        // valid/test lines survive unless they name something absent from train
        let seen: HashSet<String> = names(&d, &d.train).into_iter().flat_map(|(s, _, o)| [s, o]).collect();
        let rels: HashSet<String> = names(&d, &d.train).into_iter().map(|x| x.1).collect();
        let kept: Vec<_> = names(&d, &d.test).into_iter()
            .filter(|(s, r, o)| seen.contains(s) && seen.contains(o) && rels.contains(r))
            .collect();
        prop_assert_eq!(names(&back, &back.test), kept);
        // reloading is a fixed point
        let dir2 = tempfile::tempdir().unwrap();
        back.write_dir(dir2.path()).unwrap();
        let (again, _) = load_dataset_dir(dir2.path()).unwrap();
        prop_assert_eq!(again, back);
    }

    #[test]
    fn filter_index_matches_exhaustive_scan(
        n_e in 2usize..15,
        n_r in 1usize..4,
        raw in prop::collection::vec((0usize..100, 0usize..100, 0usize..100), 0..60),
    ) {
        let triples = named(n_e, n_r, &raw);
        let filter = FilterIndex::from_triples(triples.iter().copied());
        let set: HashSet<Triple> = triples.iter().copied().collect();
        prop_assert_eq!(filter.len(), set.len());
        for s in 0..n_e as u32 {
            for r in 0..n_r as u32 {
                let want: Vec<u32> = (0..n_e as u32).filter(|&o| set.contains(&Triple::new(s, r, o))).collect();
                prop_assert_eq!(filter.objects(s, r), want.as_slice());
                let want: Vec<u32> = (0..n_e as u32).filter(|&x| set.contains(&Triple::new(x, r, s))).collect();
                prop_assert_eq!(filter.subjects(r, s), want.as_slice());
                for o in 0..n_e as u32 {
                    let t = Triple::new(s, r, o);
                    prop_assert_eq!(filter.contains(&t), set.contains(&t));
                    prop_assert_eq!(filter.known(&t, Side::Object), filter.objects(s, r));
                }
            }
        }
    }

    #[test]
    fn merge_adds_exactly_the_new_triples(
        raw in prop::collection::vec((0usize..100, 0usize..100, 0usize..100), 1..40),
        extra in prop::collection::vec((0usize..100, 0usize..100, 0usize..100), 0..40),
    ) {
        let (n_e, n_r) = (8, 3);
        let d = Dataset::from_parts(Vocabulary::synthetic(n_e, n_r), named(n_e, n_r, &raw), vec![], vec![]).unwrap();
        let edits = named(n_e, n_r, &extra);
        let (merged, added) = d.merge_poison(&edits).unwrap();
        let before = d.train_set();
        let new: HashSet<Triple> = edits.iter().copied().filter(|t| !before.contains(t)).collect();
        prop_assert_eq!(added, new.len());
        prop_assert_eq!(&merged.train[..d.train.len()], d.train.as_slice());
        let after = merged.train_set();
        prop_assert_eq!(after.len(), merged.train.len());
        prop_assert!(edits.iter().all(|t| after.contains(t)));
    }
}

#[test]
fn crlf_and_blank_lines_are_tolerated() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("train.txt"), "a\tr\tb\r\n\r\nb\tr\tc\r\n").unwrap();
    fs::write(dir.path().join("valid.txt"), "").unwrap();
    fs::write(dir.path().join("test.txt"), "a\tr\tc\nz\tr\ta\n").unwrap();
    let (d, stats) = load_dataset_dir(dir.path()).unwrap();
    assert_eq!(d.train.len(), 2);
    assert_eq!(d.test.len(), 1);
    assert_eq!(stats.dropped_test, 1);
    assert_eq!(d.vocabulary.entity_name(2), Some("c"));
}
