//! Item features, judgment vectors and coordinate subsets.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::singular_values;

/// The `d x n` item-feature matrix: one length-`d` column per item.
///
/// Columns are stored contiguously, so `column(j)` is a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    d: usize,
    n: usize,
    data: Vec<f64>,
    item_ids: Vec<String>,
}

impl FeatureMatrix {
    /// Builds a matrix from per-item columns.
    pub fn new(columns: Vec<Vec<f64>>, item_ids: Vec<String>) -> Result<Self> {
        let n = columns.len();
        if n < 2 {
            return Err(Error::InsufficientItems { needed: 2, got: n });
        }
        let d = columns[0].len();
        if d == 0 {
            return Err(Error::Dimension("feature dimension must be at least 1".into()));
        }
        if item_ids.len() != n {
            return Err(Error::SizeMismatch(format!(
                "{} item ids for {n} columns",
                item_ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &item_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Format(format!("duplicate item id `{id}`")));
            }
        }
        let mut data = Vec::with_capacity(n * d);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != d {
                return Err(Error::Dimension(format!(
                    "column {j} has length {}, expected {d}",
                    col.len()
                )));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::Format(format!("non-finite entry {v} in column {j}")));
            }
            data.extend_from_slice(col);
        }
        Ok(Self {
            d,
            n,
            data,
            item_ids,
        })
    }

    /// Builds a matrix with generated ids `item0`, `item1`, ...
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..columns.len()).map(|j| format!("item{j}")).collect();
        Self::new(columns, ids)
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Feature vector of item `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|s| s == id)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Full-feature utility `<w, U_j>` of every item.
    pub fn utilities(&self, w: &JudgmentVector) -> Result<Vec<f64>> {
        self.check_weights(w)?;
        Ok(self
            .columns()
            .map(|c| crate::linalg::dot(c, w.as_slice()))
            .collect())
    }

    pub(crate) fn check_weights(&self, w: &JudgmentVector) -> Result<()> {
        if w.dim() != self.d {
            return Err(Error::Dimension(format!(
                "judgment vector has dimension {}, features have {}",
                w.dim(),
                self.d
            )));
        }
        Ok(())
    }

    /// Column-wise difference `U_i - U_j`.
    pub fn difference(&self, i: usize, j: usize) -> Vec<f64> {
        self.column(i)
            .iter()
            .zip(self.column(j))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Returns a matrix whose columns are shifted to sum to zero.
    pub fn center_columns(&self) -> FeatureMatrix {
        let mean = self.column_mean();
        let mut data = self.data.clone();
        for col in data.chunks_exact_mut(self.d) {
            for (v, m) in col.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        FeatureMatrix {
            d: self.d,
            n: self.n,
            data,
            item_ids: self.item_ids.clone(),
        }
    }

    /// Mean of the columns, `(1/n) sum_j U_j`.
    pub fn column_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for col in self.columns() {
            for (m, v) in mean.iter_mut().zip(col) {
                *m += v;
            }
        }
        let n = self.n as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Smallest singular value of the column-centered `d x n` matrix.
    ///
    /// This is `sqrt(lambda_min(C C^T))` for the centered matrix `C`, and so is
    /// zero whenever `d >= n`. Exactly zero (up to rounding) iff the all-ones
    /// vector is in the row space of `U` (for `U` of full row rank).
    pub fn min_singular_value_after_centering(&self) -> f64 {
        if self.d >= self.n {
            return 0.0;
        }
        let centered = self.center_columns();
        // Items as rows: n x d.
        let sv = singular_values(&centered.data, self.n, self.d);
        sv.last().copied().unwrap_or(0.0)
    }
}

/// Judgment weights `w` over the `d` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JudgmentVector(Vec<f64>);

impl JudgmentVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(v) = w.iter().find(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "judgment vector has non-finite entry {v}"
            )));
        }
        Ok(Self(w))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.0)
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &JudgmentVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<JudgmentVector> for Vec<f64> {
    fn from(w: JudgmentVector) -> Self {
        w.0
    }
}

/// A nonempty, strictly increasing set of 0-based coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    /// Accepts any order and duplicates; rejects an empty set.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::Dimension("feature subset must be nonempty".into()));
        }
        Ok(Self(indices))
    }

    pub fn full(d: usize) -> Self {
        assert!(d > 0);
        Self((0..d).collect())
    }

    pub fn single(k: usize) -> Self {
        Self(vec![k])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    /// Checks every index is below `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.0.last() {
            Some(&k) if k >= d => Err(Error::Dimension(format!(
                "coordinate {k} out of range for dimension {d}"
            ))),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for FeatureSubset {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FeatureSubset> for Vec<usize> {
    fn from(s: FeatureSubset) -> Self {
        s.0
    }
}

/// `x` restricted to the coordinates of `s`, zero elsewhere.
pub fn mask(x: &[f64], s: &FeatureSubset) -> Result<Vec<f64>> {
    s.check_dim(x.len())?;
    let mut out = vec![0.0; x.len()];
    for &k in s.indices() {
        out[k] = x[k];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fm(cols: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_columns(cols.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    #[test]
    fn mask_examples() {
        let x = [3.0, -2.0, 5.0];
        let s = FeatureSubset::new(vec![0, 2]).unwrap();
        assert_eq!(mask(&x, &s).unwrap(), vec![3.0, 0.0, 5.0]);
        assert_eq!(mask(&x, &FeatureSubset::full(3)).unwrap(), x.to_vec());
        assert_eq!(
            mask(&[1.0, 1.0], &FeatureSubset::single(1)).unwrap(),
            vec![0.0, 1.0]
        );
        assert!(matches!(
            mask(&[1.0, 1.0], &FeatureSubset::single(2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn subset_rejects_empty_and_normalizes() {
        assert!(FeatureSubset::new(vec![]).is_err());
        assert_eq!(FeatureSubset::new(vec![2, 0, 2]).unwrap().indices(), &[0, 2]);
        let parsed: FeatureSubset = serde_json::from_str("[1, 0]").unwrap();
        assert_eq!(parsed.indices(), &[0, 1]);
        assert!(serde_json::from_str::<FeatureSubset>("[]").is_err());
    }

    #[test]
    fn construction_invariants() {
        assert!(matches!(
            FeatureMatrix::from_columns(vec![vec![1.0]]),
            Err(Error::InsufficientItems { .. })
        ));
        assert!(FeatureMatrix::from_columns(vec![vec![], vec![]]).is_err());
        assert!(FeatureMatrix::from_columns(vec![vec![1.0], vec![f64::NAN]]).is_err());
        assert!(FeatureMatrix::from_columns(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(FeatureMatrix::new(
            vec![vec![1.0], vec![2.0]],
            vec!["a".into(), "a".into()]
        )
        .is_err());
    }

    #[test]
    fn centering_examples() {
        let c = fm(&[&[1.0, 0.0], &[3.0, 0.0]]).center_columns();
        assert_eq!(c.column(0), &[-1.0, 0.0]);
        assert_eq!(c.column(1), &[1.0, 0.0]);

        let c = fm(&[&[2.0], &[4.0], &[6.0]]).center_columns();
        assert_eq!(c.column(0), &[-2.0]);
        assert_eq!(c.column(1), &[0.0]);
        assert_eq!(c.column(2), &[2.0]);
        assert_eq!(c.item_ids(), &["item0", "item1", "item2"]);

        let already = fm(&[&[-1.5, 2.0], &[1.5, -2.0]]);
        let again = already.center_columns();
        for j in 0..2 {
            for (a, b) in again.column(j).iter().zip(already.column(j)) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn min_singular_value_examples() {
        let ones = fm(&[&[1.0], &[1.0], &[1.0]]);
        assert!(ones.min_singular_value_after_centering() <= 1e-10);

        let s = fm(&[&[0.0], &[2.0]]).min_singular_value_after_centering();
        assert!((s - 2f64.sqrt()).abs() < 1e-14);

        let s = fm(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).min_singular_value_after_centering();
        // Centered columns (-1/3,-1/3),(2/3,-1/3),(-1/3,2/3); C C^T = [[2/3,-1/3],[-1/3,2/3]],
        // eigenvalues 1/3 and 1.
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn all_ones_in_row_space_gives_zero() {
        // Second row = 2 * ones - first row, so ones = (row1 + row2) / 2.
        let cols: Vec<Vec<f64>> = [0.3, -1.2, 2.5, 0.7]
            .iter()
            .map(|&a| vec![a, 2.0 - a])
            .collect();
        let u = FeatureMatrix::from_columns(cols).unwrap();
        assert!(u.min_singular_value_after_centering() <= 1e-10);
    }

    proptest! {
        #[test]
        fn mask_is_idempotent(x in prop::collection::vec(-10.0f64..10.0, 1..8), bits in any::<u8>()) {
            let d = x.len();
            let mut idx: Vec<usize> = (0..d).filter(|k| bits & (1 << (k % 8)) != 0).collect();
            if idx.is_empty() { idx.push(0); }
            let s = FeatureSubset::new(idx).unwrap();
            let once = mask(&x, &s).unwrap();
            prop_assert_eq!(mask(&once, &s).unwrap(), once);
            prop_assert_eq!(mask(&x, &FeatureSubset::full(d)).unwrap(), x);
        }

        #[test]
        fn centering_sums_to_zero_and_keeps_differences(
            cols in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..10)
        ) {
            let u = FeatureMatrix::from_columns(cols).unwrap();
            let c = u.center_columns();
            let tol = 1e-12 * u.n() as f64 * u.max_abs_entry().max(1.0);
            for k in 0..u.d() {
                let s: f64 = c.columns().map(|col| col[k]).sum();
                prop_assert!(s.abs() <= tol);
            }
            // Differences agree up to the rounding of the shared shift.
            for i in 0..u.n() {
                for j in 0..u.n() {
                    for (a, b) in u.difference(i, j).iter().zip(c.difference(i, j)) {
                        prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * u.max_abs_entry().max(1.0));
                    }
                }
            }
        }
    }
}
