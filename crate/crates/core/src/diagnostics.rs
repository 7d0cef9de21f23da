//! Empirical pair statistics, stochastic transitivity checks, and pairwise
//! inconsistency counts.
//!
//! For a chain `i > j > k` with `P_ij > 1/2` and `P_jk > 1/2`:
//!
//! | level    | violated when            |
//! |----------|--------------------------|
//! | strong   | `P_ik < max(P_ij, P_jk)` |
//! | moderate | `P_ik < min(P_ij, P_jk)` |
//! | weak     | `P_ik < 1/2`             |
//!
//! so every weak violation is also moderate, and every moderate one strong.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, JudgmentVector};
use crate::linalg::dot;
use crate::model::{sigmoid, ComparisonDataset};
use crate::ranking::Ranking;
use crate::selection::{pairs, RealizedSelection};

/// Win counts for one canonical pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub wins_i: u64,
    pub wins_j: u64,
}

impl PairCount {
    pub fn total(&self) -> u64 {
        self.wins_i + self.wins_j
    }

    /// Empirical probability that `i` beats `j`; `None` without observations.
    pub fn p_hat(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.wins_i as f64 / self.total() as f64)
    }
}

/// Per-pair win counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub pairs: BTreeMap<(usize, usize), PairCount>,
}

impl PairStats {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&PairCount> {
        self.pairs.get(&(i, j))
    }

    /// Empirical probabilities with counts attached.
    pub fn probabilities(&self) -> PairProbabilities {
        let mut out = PairProbabilities::default();
        for (&(i, j), c) in &self.pairs {
            if let Some(p) = c.p_hat() {
                out.insert_with_count(i, j, p, c.total());
            }
        }
        out
    }
}

/// Aggregates samples by canonical pair.
pub fn empirical_pair_stats(data: &ComparisonDataset) -> PairStats {
    PairStats {
        pairs: data
            .pair_counts()
            .into_iter()
            .map(|(k, (wi, wj))| (k, PairCount { wins_i: wi, wins_j: wj }))
            .collect(),
    }
}

/// Probability that `i` beats `j`, stored once per canonical pair `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairProbability {
    pub p: f64,
    /// Number of observations behind `p`, for empirical sources.
    pub count: Option<u64>,
}

/// A partial table of pairwise win probabilities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairProbabilities {
    entries: BTreeMap<(usize, usize), PairProbability>,
}

impl PairProbabilities {
    /// Records `P(i beats j) = p`, in either orientation.
    pub fn insert(&mut self, i: usize, j: usize, p: f64) {
        self.insert_entry(i, j, p, None);
    }

    pub fn insert_with_count(&mut self, i: usize, j: usize, p: f64, count: u64) {
        self.insert_entry(i, j, p, Some(count));
    }

    fn insert_entry(&mut self, i: usize, j: usize, p: f64, count: Option<u64>) {
        let (key, p) = if i < j { ((i, j), p) } else { ((j, i), 1.0 - p) };
        self.entries.insert(key, PairProbability { p, count });
    }

    /// `P(i beats j)` in either orientation.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i < j {
            self.entries.get(&(i, j)).map(|e| e.p)
        } else {
            self.entries.get(&(j, i)).map(|e| 1.0 - e.p)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &PairProbability)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    fn validate(&self) -> Result<()> {
        for (&(i, j), e) in &self.entries {
            if !(0.0..=1.0).contains(&e.p) {
                return Err(Error::InvalidProbability { i, j, value: e.p });
            }
        }
        Ok(())
    }

    /// Keeps entries with no count or with `count >= min_count`.
    fn filtered(&self, min_count: Option<u64>) -> PairProbabilities {
        let Some(min) = min_count else {
            return self.clone();
        };
        PairProbabilities {
            entries: self
                .entries
                .iter()
                .filter(|(_, e)| e.count.is_none_or(|c| c >= min))
                .map(|(k, v)| (*k, *v))
                .collect(),
        }
    }
}

/// One checked chain `i > j > k` that violates at least strong transitivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolatingTriple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub p_ij: f64,
    pub p_jk: f64,
    pub p_ik: f64,
    pub strong: bool,
    pub moderate: bool,
    pub weak: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityReport {
    /// Triples with all three pairs present and a qualifying chain.
    pub triples_checked: u64,
    pub strong_violations: u64,
    pub moderate_violations: u64,
    pub weak_violations: u64,
    /// Violation counts divided by `triples_checked`; `None` when nothing was checked.
    pub strong_rate: Option<f64>,
    pub moderate_rate: Option<f64>,
    pub weak_rate: Option<f64>,
    pub violating_triples: Vec<ViolatingTriple>,
}

/// Scans every triple of items whose three pairs all have probabilities.
///
/// A triple is checked in the first orientation (lexicographic over
/// permutations of the sorted triple) with `P_ij > 1/2` and `P_jk > 1/2`, and
/// counted once. A non-cyclic triple qualifies in exactly one orientation; a
/// cyclic triple qualifies in three and violates all levels in each.
pub fn count_transitivity_violations(
    probs: &PairProbabilities,
    min_count: Option<u64>,
) -> Result<TransitivityReport> {
    probs.validate()?;
    let probs = probs.filtered(min_count);

    let mut neighbors: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for ((i, j), _) in probs.iter() {
        neighbors.entry(i).or_default().insert(j);
        neighbors.entry(j).or_default().insert(i);
    }
    let lookup: HashMap<(usize, usize), f64> = probs.iter().map(|(k, e)| (k, e.p)).collect();
    let p = |i: usize, j: usize| -> f64 {
        if i < j {
            lookup[&(i, j)]
        } else {
            1.0 - lookup[&(j, i)]
        }
    };

    let mut report = TransitivityReport {
        triples_checked: 0,
        strong_violations: 0,
        moderate_violations: 0,
        weak_violations: 0,
        strong_rate: None,
        moderate_rate: None,
        weak_rate: None,
        violating_triples: Vec::new(),
    };

    for (&a, na) in &neighbors {
        for &b in na.range((a + 1)..) {
            let nb = &neighbors[&b];
            for &c in na.range((b + 1)..) {
                if !nb.contains(&c) {
                    continue;
                }
                let orientations = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)];
                let Some(&(i, j, k)) = orientations
                    .iter()
                    .find(|&&(i, j, k)| p(i, j) > 0.5 && p(j, k) > 0.5)
                else {
                    continue;
                };
                report.triples_checked += 1;
                let (p_ij, p_jk, p_ik) = (p(i, j), p(j, k), p(i, k));
                let strong = p_ik < p_ij.max(p_jk);
                let moderate = p_ik < p_ij.min(p_jk);
                let weak = p_ik < 0.5;
                report.strong_violations += strong as u64;
                report.moderate_violations += moderate as u64;
                report.weak_violations += weak as u64;
                if strong {
                    report.violating_triples.push(ViolatingTriple {
                        i,
                        j,
                        k,
                        p_ij,
                        p_jk,
                        p_ik,
                        strong,
                        moderate,
                        weak,
                    });
                }
            }
        }
    }

    if report.triples_checked > 0 {
        let t = report.triples_checked as f64;
        report.strong_rate = Some(report.strong_violations as f64 / t);
        report.moderate_rate = Some(report.moderate_violations as f64 / t);
        report.weak_rate = Some(report.weak_violations as f64 / t);
    }
    Ok(report)
}

/// Exact model probabilities for every pair.
pub fn model_probabilities(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
) -> Result<PairProbabilities> {
    u.check_weights(w)?;
    sel.check_matches(u)?;
    let mut out = PairProbabilities::default();
    let mut x = vec![0.0; u.d()];
    for (i, j) in pairs(u.n()) {
        sel.masked_difference_into(u, i, j, &mut x);
        out.insert(i, j, sigmoid(dot(w.as_slice(), &x)));
    }
    Ok(out)
}

/// Transitivity report for the model's own probabilities.
pub fn model_transitivity_report(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
) -> Result<TransitivityReport> {
    if u.n() < 3 {
        return Err(Error::InsufficientItems { needed: 3, got: u.n() });
    }
    count_transitivity_violations(&model_probabilities(u, w, sel)?, None)
}

/// What to compare a probability table against.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    /// `p = 1` when the ranking places `i` above `j`, else `0`.
    Ranking(&'a Ranking),
    Probabilities(&'a PairProbabilities),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyReport {
    /// Pairs present in both sources.
    pub compared: u64,
    /// Pairs with `(1/2 - p1)(1/2 - p2) < 0`.
    pub inconsistent: u64,
    pub rate: f64,
}

/// Counts pairs on which two sources disagree about the winner.
pub fn pairwise_inconsistency(
    probs: &PairProbabilities,
    reference: Reference<'_>,
) -> Result<InconsistencyReport> {
    let mut compared = 0u64;
    let mut inconsistent = 0u64;
    for ((i, j), e) in probs.iter() {
        let other = match reference {
            Reference::Ranking(r) => r.prefers(i, j).map(|above| if above { 1.0 } else { 0.0 }),
            Reference::Probabilities(q) => q.get(i, j),
        };
        let Some(p2) = other else {
            continue;
        };
        compared += 1;
        if (0.5 - e.p) * (0.5 - p2) < 0.0 {
            inconsistent += 1;
        }
    }
    if compared == 0 {
        return Err(Error::UndefinedMetric(
            "the two sources share no pairs".into(),
        ));
    }
    Ok(InconsistencyReport {
        compared,
        inconsistent,
        rate: inconsistent as f64 / compared as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ComparisonSample;

    fn triple(pab: f64, pbc: f64, pac: f64) -> PairProbabilities {
        let mut p = PairProbabilities::default();
        p.insert(0, 1, pab);
        p.insert(1, 2, pbc);
        p.insert(0, 2, pac);
        p
    }

    #[test]
    fn district_triple_violates_only_strong() {
        let r = count_transitivity_violations(&triple(1.00, 0.67, 0.70), None).unwrap();
        assert_eq!(r.triples_checked, 1);
        assert_eq!((r.strong_violations, r.moderate_violations, r.weak_violations), (1, 0, 0));
        let t = &r.violating_triples[0];
        assert_eq!((t.i, t.j, t.k), (0, 1, 2));
    }

    #[test]
    fn transitive_and_fully_violating_triples() {
        let r = count_transitivity_violations(&triple(0.9, 0.8, 0.95), None).unwrap();
        assert_eq!((r.strong_violations, r.moderate_violations, r.weak_violations), (0, 0, 0));
        assert_eq!(r.strong_rate, Some(0.0));

        let r = count_transitivity_violations(&triple(0.9, 0.8, 0.4), None).unwrap();
        assert_eq!((r.strong_violations, r.moderate_violations, r.weak_violations), (1, 1, 1));
    }

    #[test]
    fn orientation_is_found_from_any_labeling() {
        // Same district triple with items relabeled: C=0, A=1, B=2.
        let mut p = PairProbabilities::default();
        p.insert(1, 2, 1.00);
        p.insert(2, 0, 0.67);
        p.insert(1, 0, 0.70);
        let r = count_transitivity_violations(&p, None).unwrap();
        assert_eq!((r.strong_violations, r.moderate_violations, r.weak_violations), (1, 0, 0));
        let t = &r.violating_triples[0];
        assert_eq!((t.i, t.j, t.k), (1, 2, 0));
    }

    #[test]
    fn half_probabilities_do_not_qualify() {
        let r = count_transitivity_violations(&triple(0.5, 0.8, 0.1), None).unwrap();
        // (0,1) at exactly 1/2 blocks the chains through it; 2 > 0 and 1 > 2 remain.
        assert_eq!(r.triples_checked, 1);
        let r = count_transitivity_violations(&triple(0.5, 0.5, 0.5), None).unwrap();
        assert_eq!(r.triples_checked, 0);
        assert_eq!(r.strong_rate, None);
    }

    #[test]
    fn incomplete_triples_are_skipped_and_bad_probabilities_rejected() {
        let mut p = PairProbabilities::default();
        p.insert(0, 1, 0.9);
        p.insert(1, 2, 0.9);
        assert_eq!(count_transitivity_violations(&p, None).unwrap().triples_checked, 0);
        p.insert(0, 2, 1.5);
        assert!(matches!(
            count_transitivity_violations(&p, None),
            Err(Error::InvalidProbability { .. })
        ));
    }

    #[test]
    fn min_count_filter_drops_sparse_pairs() {
        let mut p = PairProbabilities::default();
        p.insert_with_count(0, 1, 1.0, 10);
        p.insert_with_count(1, 2, 0.67, 6);
        p.insert_with_count(0, 2, 0.70, 4);
        assert_eq!(count_transitivity_violations(&p, None).unwrap().triples_checked, 1);
        assert_eq!(count_transitivity_violations(&p, Some(5)).unwrap().triples_checked, 0);
    }

    #[test]
    fn empirical_stats_examples() {
        let s = |i, j, y| ComparisonSample { i, j, y };
        let data = ComparisonDataset::from_samples(vec![
            s(0, 1, true),
            s(0, 1, true),
            s(0, 1, true),
            s(0, 1, false),
        ]);
        let stats = empirical_pair_stats(&data);
        assert_eq!(stats.get(0, 1).unwrap().p_hat(), Some(0.75));
        assert!(empirical_pair_stats(&ComparisonDataset::from_samples(vec![])).is_empty());

        let flipped = ComparisonDataset::from_samples(vec![ComparisonSample::from_outcome(1, 0).unwrap()]);
        let stats = empirical_pair_stats(&flipped);
        assert_eq!(stats.get(0, 1), Some(&PairCount { wins_i: 0, wins_j: 1 }));
        assert_eq!(stats.probabilities().get(1, 0), Some(1.0));
    }

    #[test]
    fn inconsistency_examples() {
        let mut a = PairProbabilities::default();
        let mut b = PairProbabilities::default();
        a.insert(0, 1, 0.6);
        b.insert(0, 1, 0.4);
        let r = pairwise_inconsistency(&a, Reference::Probabilities(&b)).unwrap();
        assert_eq!((r.compared, r.inconsistent), (1, 1));

        b.insert(0, 1, 0.9);
        let r = pairwise_inconsistency(&a, Reference::Probabilities(&b)).unwrap();
        assert_eq!(r.inconsistent, 0);

        a.insert(0, 1, 0.5);
        let r = pairwise_inconsistency(&a, Reference::Probabilities(&b)).unwrap();
        assert_eq!(r.inconsistent, 0);

        let ranking = Ranking::from_order(vec![1, 0]).unwrap();
        a.insert(0, 1, 0.8);
        let r = pairwise_inconsistency(&a, Reference::Ranking(&ranking)).unwrap();
        assert_eq!((r.compared, r.inconsistent, r.rate), (1, 1, 1.0));

        let empty = PairProbabilities::default();
        assert!(pairwise_inconsistency(&a, Reference::Probabilities(&empty)).is_err());
    }

    #[test]
    fn report_serializes_with_triples() {
        let r = count_transitivity_violations(&triple(1.00, 0.67, 0.70), None).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["violating_triples"][0]["p_ik"], 0.7);
        let back: TransitivityReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
