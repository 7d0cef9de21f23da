//! Selection functions: which coordinates a pair of items is compared on.
//!
//! A [`RealizedSelection`] binds a [`SelectionSpec`] to a feature matrix and
//! materializes every pair's subset eagerly, so lookups are plain reads and
//! the table is safe to share between threads.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSubset};
use crate::rng;

/// Which selection rule to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionSpec {
    /// Every coordinate, for every pair.
    Full,
    /// The `t` coordinates with the largest two-point sample variance.
    TopT { t: usize },
    /// `k` coordinates drawn uniformly without replacement, per pair.
    RandomExactlyK {
        k: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Each coordinate kept independently with probability `p`, per pair.
    RandomBernoulli {
        p: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl SelectionSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            SelectionSpec::Full => Ok(()),
            SelectionSpec::TopT { t } if t == 0 || t > d => Err(Error::InvalidConfig(format!(
                "top_t requires 1 <= t <= d = {d}, got t = {t}"
            ))),
            SelectionSpec::RandomExactlyK { k, .. } if k == 0 || k > d => Err(
                Error::InvalidConfig(format!("random_exactly_k requires 1 <= k <= d = {d}, got k = {k}")),
            ),
            SelectionSpec::RandomBernoulli { p, .. } if !(p > 0.0 && p <= 1.0) => Err(
                Error::InvalidConfig(format!("random_bernoulli requires 0 < p <= 1, got p = {p}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("selection spec serializes")
    }
}

impl fmt::Display for SelectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionSpec::Full => write!(f, "full"),
            SelectionSpec::TopT { t } => write!(f, "top_t:{t}"),
            SelectionSpec::RandomExactlyK { k, seed } => write!(f, "random_exactly_k:{k}:{seed}"),
            SelectionSpec::RandomBernoulli { p, seed } => write!(f, "random_bernoulli:{p}:{seed}"),
        }
    }
}

/// Index of the canonical pair `(i, j)`, `i < j`, in row-major upper-triangle order.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Number of unordered pairs, `C(n, 2)`.
#[inline]
pub fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All canonical pairs `(i, j)` with `i < j`, in [`pair_index`] order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

/// A selection function bound to a particular feature matrix.
#[derive(Debug, Clone)]
pub struct RealizedSelection {
    spec: SelectionSpec,
    n: usize,
    d: usize,
    /// One subset per canonical pair; empty for `Full`.
    table: Vec<FeatureSubset>,
    full: FeatureSubset,
}

impl RealizedSelection {
    pub fn new(spec: SelectionSpec, u: &FeatureMatrix) -> Result<Self> {
        let (n, d) = (u.n(), u.d());
        spec.validate(d)?;
        let full = FeatureSubset::full(d);
        let table = match &spec {
            SelectionSpec::Full => Vec::new(),
            _ => pairs(n)
                .map(|(i, j)| realize(&spec, u, i, j))
                .collect(),
        };
        Ok(Self {
            spec,
            n,
            d,
            table,
            full,
        })
    }

    pub fn spec(&self) -> &SelectionSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_full(&self) -> bool {
        matches!(self.spec, SelectionSpec::Full)
    }

    /// The subset for the pair `{i, j}`; argument order does not matter.
    pub fn select(&self, i: usize, j: usize) -> Result<&FeatureSubset> {
        if i == j {
            return Err(Error::InvalidPair(i, j));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::Dimension(format!(
                "pair ({i}, {j}) out of range for {} items",
                self.n
            )));
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Ok(self.get_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn get_unchecked(&self, i: usize, j: usize) -> &FeatureSubset {
        if self.table.is_empty() {
            &self.full
        } else {
            &self.table[pair_index(self.n, i, j)]
        }
    }

    /// Checks this selection was realized for a matrix of `u`'s shape.
    pub fn check_matches(&self, u: &FeatureMatrix) -> Result<()> {
        if u.n() != self.n || u.d() != self.d {
            return Err(Error::SizeMismatch(format!(
                "selection realized for n = {}, d = {} but features have n = {}, d = {}",
                self.n,
                self.d,
                u.n(),
                u.d()
            )));
        }
        Ok(())
    }

    /// Masked difference `mask(U_i - U_j, tau(i, j))` written into `out`.
    #[inline]
    pub(crate) fn masked_difference_into(&self, u: &FeatureMatrix, i: usize, j: usize, out: &mut [f64]) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let subset = self.get_unchecked(a, b);
        let (ci, cj) = (u.column(i), u.column(j));
        if subset.len() == self.d {
            for k in 0..self.d {
                out[k] = ci[k] - cj[k];
            }
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            for &k in subset.indices() {
                out[k] = ci[k] - cj[k];
            }
        }
    }

    /// Masked difference `mask(U_i - U_j, tau(i, j))`.
    pub fn masked_difference(&self, u: &FeatureMatrix, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_matches(u)?;
        self.select(i, j)?;
        let mut out = vec![0.0; self.d];
        self.masked_difference_into(u, i, j, &mut out);
        Ok(out)
    }

    /// Groups pairs by their single selected coordinate: entry `k` lists the
    /// pairs `(i, j)` with `tau(i, j) = {k}`.
    pub fn partition_by_coordinate(&self) -> Result<Vec<Vec<(usize, usize)>>> {
        let mut parts = vec![Vec::new(); self.d];
        for (i, j) in pairs(self.n) {
            let s = self.get_unchecked(i, j);
            if s.len() != 1 {
                return Err(Error::NotSingleCoordinate { i, j, len: s.len() });
            }
            parts[s.indices()[0]].push((i, j));
        }
        Ok(parts)
    }
}

fn realize(spec: &SelectionSpec, u: &FeatureMatrix, i: usize, j: usize) -> FeatureSubset {
    let d = u.d();
    match *spec {
        SelectionSpec::Full => FeatureSubset::full(d),
        SelectionSpec::TopT { t } => top_t(u.column(i), u.column(j), t),
        SelectionSpec::RandomExactlyK { k, seed } => {
            let mut r = rng::stream(seed, &[i as u64, j as u64, 0]);
            FeatureSubset::new(index::sample(&mut r, d, k).into_vec()).expect("k >= 1")
        }
        SelectionSpec::RandomBernoulli { p, seed } => {
            // Redraw with a bumped counter until at least one coordinate survives.
            (0u64..)
                .find_map(|draw| {
                    let mut r = rng::stream(seed, &[i as u64, j as u64, draw]);
                    let picked: Vec<usize> = (0..d).filter(|_| r.random::<f64>() < p).collect();
                    FeatureSubset::new(picked).ok()
                })
                .expect("p > 0 eventually selects a coordinate")
        }
    }
}

/// Top-`t` coordinates by `|a_k - b_k|`, ties to the lower index.
///
/// Ranking by `|a_k - b_k|` is the same as ranking by the two-point sample
/// variance `((a_k - mu)^2 + (b_k - mu)^2) / 2 = (a_k - b_k)^2 / 4`.
pub fn top_t(a: &[f64], b: &[f64], t: usize) -> FeatureSubset {
    let mut order: Vec<usize> = (0..a.len()).collect();
    let gap = |k: usize| (a[k] - b[k]).abs();
    order.sort_by(|&x, &y| gap(y).total_cmp(&gap(x)).then(x.cmp(&y)));
    order.truncate(t);
    FeatureSubset::new(order).expect("t >= 1")
}
