//! Transitivity diagnostics against an exhaustive scan written from the definitions.

#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use salient_core::diagnostics::model_probabilities;
use salient_core::{
    count_transitivity_violations, model_transitivity_report, synthetic_instance, PairProbabilities,
    RealizedSelection, SelectionSpec,
};

/// Visits every ordered triple, flags each unordered triple at each level if
/// any qualifying orientation violates it, and counts qualifying triples.
fn brute(p: &[Vec<Option<f64>>]) -> (u64, u64, u64, u64) {
    let n = p.len();
    let (mut checked, mut s, mut m, mut w) = (0, 0, 0, 0);
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let (mut q, mut fs, mut fm, mut fw) = (false, false, false, false);
                for &(i, j, k) in &[(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                    let (Some(pij), Some(pjk), Some(pik)) = (p[i][j], p[j][k], p[i][k]) else {
                        continue;
                    };
                    if pij > 0.5 && pjk > 0.5 {
                        q = true;
                        fs |= pik < pij.max(pjk);
                        fm |= pik < pij.min(pjk);
                        fw |= pik < 0.5;
                    }
                }
                checked += q as u64;
                s += fs as u64;
                m += fm as u64;
                w += fw as u64;
            }
        }
    }
    (checked, s, m, w)
}

fn table() -> impl Strategy<Value = Vec<Vec<Option<f64>>>> {
    let cell = prop_oneof![
        1 => Just(None),
        1 => Just(Some(0.5)),
        1 => prop::sample::select(vec![0.0, 0.25, 0.67, 0.7, 0.75, 1.0]).prop_map(Some),
        4 => (0.0..=1.0f64).prop_map(Some),
    ];
    (3usize..=6).prop_flat_map(move |n| prop::collection::vec(cell.clone(), n * (n - 1) / 2).prop_map(move |cells| {
        let mut p = vec![vec![None; n]; n];
        let mut it = cells.into_iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = it.next().unwrap();
                p[i][j] = v;
                p[j][i] = v.map(|x| 1.0 - x);
            }
        }
        p
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn report_matches_exhaustive_scan(p in table()) {
        let mut probs = PairProbabilities::default();
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                if let Some(v) = p[i][j] {
                    probs.insert(i, j, v);
                }
            }
        }
        let r = count_transitivity_violations(&probs, None).unwrap();
        let (checked, s, m, w) = brute(&p);
        prop_assert_eq!(
            (r.triples_checked, r.strong_violations, r.moderate_violations, r.weak_violations),
            (checked, s, m, w)
        );
        prop_assert!(r.weak_violations <= r.moderate_violations);
        prop_assert!(r.moderate_violations <= r.strong_violations);
        prop_assert_eq!(r.violating_triples.len() as u64, r.strong_violations);
    }
}

#[test]
fn model_reports_match_exhaustive_scan() {
    for seed in 0..20 {
        let (u, w) = synthetic_instance(3, 6, seed).unwrap();
        let sel = RealizedSelection::new(SelectionSpec::TopT { t: 1 }, &u).unwrap();
        let probs = model_probabilities(&u, &w, &sel).unwrap();
        let table: Vec<Vec<Option<f64>>> =
            (0..6).map(|i| (0..6).map(|j| if i == j { None } else { probs.get(i, j) }).collect()).collect();
        let r = model_transitivity_report(&u, &w, &sel).unwrap();
        assert_eq!(
            (r.triples_checked, r.strong_violations, r.moderate_violations, r.weak_violations),
            brute(&table)
        );
    }
}

#[test]
fn full_selection_and_one_dimension_are_transitive() {
    for seed in 0..50 {
        let (u, w) = synthetic_instance(5, 15, seed).unwrap();
        let sel = RealizedSelection::new(SelectionSpec::Full, &u).unwrap();
        let r = model_transitivity_report(&u, &w, &sel).unwrap();
        assert_eq!(r.strong_violations, 0, "seed {seed}");
        assert_eq!(r.triples_checked, 455);
    }
    for seed in 0..10 {
        let (u, w) = synthetic_instance(1, 12, seed).unwrap();
        for spec in [SelectionSpec::TopT { t: 1 }, SelectionSpec::RandomBernoulli { p: 0.3, seed }] {
            let sel = RealizedSelection::new(spec, &u).unwrap();
            assert_eq!(model_transitivity_report(&u, &w, &sel).unwrap().strong_violations, 0);
        }
    }
}

#[test]
fn too_few_items_is_an_error() {
    let (u, w) = synthetic_instance(2, 2, 0).unwrap();
    let sel = RealizedSelection::new(SelectionSpec::Full, &u).unwrap();
    assert!(model_transitivity_report(&u, &w, &sel).is_err());
}
