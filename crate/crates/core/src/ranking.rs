//! Rankings, Kendall tau, pairwise accuracy and utility gaps.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, JudgmentVector};
use crate::linalg::norm2;
use crate::model::{prob_beats, ComparisonDataset};
use crate::selection::{num_pairs, pairs, RealizedSelection};

/// A strict ranking of a set of items, best first.
///
/// Positions are 1-based: the first item in `order` has position 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ranking {
    order: Vec<usize>,
    #[serde(skip)]
    position: HashMap<usize, usize>,
}

impl Ranking {
    /// Builds a ranking from items listed best first. Items must be distinct.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let mut position = HashMap::with_capacity(order.len());
        for (k, &item) in order.iter().enumerate() {
            if position.insert(item, k + 1).is_some() {
                return Err(Error::Format(format!("item {item} ranked twice")));
            }
        }
        Ok(Self { order, position })
    }

    /// Builds a ranking over items `0..n` from each item's 1-based position.
    pub fn from_positions(positions: &[usize]) -> Result<Self> {
        let n = positions.len();
        let mut order = vec![usize::MAX; n];
        for (item, &p) in positions.iter().enumerate() {
            if p == 0 || p > n || order[p - 1] != usize::MAX {
                return Err(Error::Format(format!(
                    "positions {positions:?} are not a permutation of 1..={n}"
                )));
            }
            order[p - 1] = item;
        }
        Self::from_order(order)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Items best first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based position of `item`, if ranked.
    pub fn position(&self, item: usize) -> Option<usize> {
        self.position.get(&item).copied()
    }

    /// The induced ranking on `items` (kept in this ranking's order).
    pub fn restrict_to(&self, items: &[usize]) -> Result<Ranking> {
        for &it in items {
            if self.position(it).is_none() {
                return Err(Error::SizeMismatch(format!("item {it} is not ranked")));
            }
        }
        let keep: std::collections::HashSet<usize> = items.iter().copied().collect();
        Ranking::from_order(self.order.iter().copied().filter(|i| keep.contains(i)).collect())
    }

    /// True when `i` is placed above `j`; `None` unless both are ranked.
    pub fn prefers(&self, i: usize, j: usize) -> Option<bool> {
        Some(self.position(i)? < self.position(j)?)
    }
}

impl TryFrom<Vec<usize>> for Ranking {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Ranking::from_order(order)
    }
}

impl From<Ranking> for Vec<usize> {
    fn from(r: Ranking) -> Self {
        r.order
    }
}

/// Sorts items by full-feature utility `<w, U_i>`, highest first; equal
/// utilities keep the lower item index first.
pub fn rank_from_weights(u: &FeatureMatrix, w: &JudgmentVector) -> Result<Ranking> {
    let util = u.utilities(w)?;
    let mut order: Vec<usize> = (0..u.n()).collect();
    order.sort_by(|&a, &b| util[b].total_cmp(&util[a]).then(a.cmp(&b)));
    Ranking::from_order(order)
}

fn check_same_items(a: &Ranking, b: &Ranking) -> Result<()> {
    if a.len() != b.len() || a.order.iter().any(|i| b.position(*i).is_none()) {
        return Err(Error::SizeMismatch(format!(
            "rankings cover different items ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Number of discordant pairs between two rankings of the same items.
///
/// Counted as inversions of `b`'s positions read in `a`'s order, by merge
/// sort in `O(n log n)`.
pub fn kendall_distance(a: &Ranking, b: &Ranking) -> Result<u64> {
    check_same_items(a, b)?;
    let mut seq: Vec<usize> = a
        .order
        .iter()
        .map(|i| b.position(*i).expect("checked"))
        .collect();
    let mut buf = vec![0; seq.len()];
    Ok(count_inversions(&mut seq, &mut buf))
}

fn count_inversions(v: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}

/// Kendall tau correlation `1 - 2 K / C(n, 2)`.
pub fn kendall_correlation(a: &Ranking, b: &Ranking) -> Result<f64> {
    let k = kendall_distance(a, b)?;
    if a.len() < 2 {
        return Err(Error::UndefinedMetric(
            "Kendall correlation needs at least two items".into(),
        ));
    }
    Ok(1.0 - 2.0 * k as f64 / num_pairs(a.len()) as f64)
}

/// Fraction of pairs with a strict empirical majority whose winner the model
/// also favors.
///
/// Pairs with tied counts, or where the model probability is exactly 1/2,
/// are left out entirely.
pub fn pairwise_accuracy(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
    data: &ComparisonDataset,
) -> Result<f64> {
    let mut eligible = 0usize;
    let mut correct = 0usize;
    for ((i, j), (wi, wj)) in data.pair_counts() {
        if wi == wj {
            continue;
        }
        let p = prob_beats(u, w, sel, i, j)?;
        if p == 0.5 {
            continue;
        }
        eligible += 1;
        if (p > 0.5) == (wi > wj) {
            correct += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::UndefinedMetric(
            "no pair has a strict majority winner and a decisive model probability".into(),
        ));
    }
    Ok(correct as f64 / eligible as f64)
}

/// Sorted absolute utility gaps and the largest feature norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGaps {
    /// `|<w*, U_i - U_j>|` over all pairs, ascending.
    pub gaps: Vec<f64>,
    /// `max_i ||U_i||_2`.
    pub max_norm: f64,
}

impl AlphaGaps {
    /// The `k`-th smallest gap (1-based).
    pub fn alpha(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.gaps.get(i).copied())
    }
}

pub fn alpha_gaps(u: &FeatureMatrix, w_star: &JudgmentVector) -> Result<AlphaGaps> {
    let util = u.utilities(w_star)?;
    let mut gaps: Vec<f64> = pairs(u.n()).map(|(i, j)| (util[i] - util[j]).abs()).collect();
    gaps.sort_by(f64::total_cmp);
    let max_norm = u.columns().map(norm2).fold(0.0, f64::max);
    Ok(AlphaGaps { gaps, max_norm })
}
