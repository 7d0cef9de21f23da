//! Comparison probabilities, sampling, and the negative log-likelihood with
//! its gradient and Hessian.
//!
//! For a pair `(i, j)` compared on `tau(i, j)`, with masked difference
//! `x = mask(U_i - U_j, tau(i, j))` and `u = <w, x>`:
//!
//! ```text
//! P(i beats j) = sigmoid(u)
//! loss(y)      = log(1 + e^u) - y u
//! grad         = (sigmoid(u) - y) x
//! hess         = h(u) x x^T,   h(u) = e^u / (1 + e^u)^2
//! ```
//!
//! A ridge term `mu ||w||^2` is added on top of the summed loss.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, JudgmentVector};
use crate::linalg::{dot, SymMatrix};
use crate::rng;
use crate::selection::RealizedSelection;

/// `log(1 + e^u)` without overflow.
#[inline]
pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^-u)`.
#[inline]
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Hessian weight `h(u) = e^u / (1 + e^u)^2`, evaluated through `|u|` so that
/// `h(u) == h(-u)` holds exactly.
#[inline]
pub fn hessian_weight(u: f64) -> f64 {
    let e = (-u.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// One observed comparison between items `i < j`; `y` is true when `i` won.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComparisonSample {
    pub i: usize,
    pub j: usize,
    pub y: bool,
}

impl ComparisonSample {
    /// Canonical record of `winner` beating `loser`.
    pub fn from_outcome(winner: usize, loser: usize) -> Result<Self> {
        if winner == loser {
            return Err(Error::InvalidPair(winner, loser));
        }
        Ok(if winner < loser {
            Self {
                i: winner,
                j: loser,
                y: true,
            }
        } else {
            Self {
                i: loser,
                j: winner,
                y: false,
            }
        })
    }

    pub fn winner(&self) -> usize {
        if self.y {
            self.i
        } else {
            self.j
        }
    }

    pub fn loser(&self) -> usize {
        if self.y {
            self.j
        } else {
            self.i
        }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic { seed: u64 },
    File { path: PathBuf },
    InMemory,
}

/// An ordered list of comparison samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDataset {
    samples: Vec<ComparisonSample>,
    provenance: Provenance,
}

impl ComparisonDataset {
    pub fn new(samples: Vec<ComparisonSample>, provenance: Provenance) -> Self {
        Self {
            samples,
            provenance,
        }
    }

    pub fn from_samples(samples: Vec<ComparisonSample>) -> Self {
        Self::new(samples, Provenance::InMemory)
    }

    pub fn samples(&self) -> &[ComparisonSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Checks every sample refers to one of `n` items and is canonical.
    pub fn check_items(&self, n: usize) -> Result<()> {
        for s in &self.samples {
            if s.i >= s.j {
                return Err(Error::InvalidPair(s.i, s.j));
            }
            if s.j >= n {
                return Err(Error::Dimension(format!(
                    "sample ({}, {}) out of range for {n} items",
                    s.i, s.j
                )));
            }
        }
        Ok(())
    }

    /// `(wins of i, wins of j)` per canonical pair, sorted by pair.
    pub fn pair_counts(&self) -> BTreeMap<(usize, usize), (u64, u64)> {
        let mut out: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
        for s in &self.samples {
            let e = out.entry((s.i, s.j)).or_default();
            if s.y {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        out
    }
}

/// Probability that item `i` beats item `j`.
pub fn prob_beats(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
    i: usize,
    j: usize,
) -> Result<f64> {
    u.check_weights(w)?;
    let x = sel.masked_difference(u, i, j)?;
    Ok(sigmoid(dot(w.as_slice(), &x)))
}

/// Draws `m` comparisons: pairs uniformly with replacement, outcomes from
/// the model with judgment vector `w_star`.
pub fn sample_comparisons(
    u: &FeatureMatrix,
    w_star: &JudgmentVector,
    sel: &RealizedSelection,
    m: usize,
    seed: u64,
) -> Result<ComparisonDataset> {
    let n = u.n();
    if n < 2 {
        return Err(Error::InsufficientItems { needed: 2, got: n });
    }
    if m == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    u.check_weights(w_star)?;
    sel.check_matches(u)?;

    // Cache the win probability per pair as pairs repeat.
    let mut probs = vec![f64::NAN; crate::selection::num_pairs(n)];
    let mut x = vec![0.0; u.d()];
    let mut r = rng::stream(seed, &[]);
    let mut samples = Vec::with_capacity(m);
    for _ in 0..m {
        let a = r.random_range(0..n);
        let mut b = r.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        let slot = &mut probs[crate::selection::pair_index(n, i, j)];
        if slot.is_nan() {
            sel.masked_difference_into(u, i, j, &mut x);
            *slot = sigmoid(dot(w_star.as_slice(), &x));
        }
        let y = r.random::<f64>() < *slot;
        samples.push(ComparisonSample { i, j, y });
    }
    Ok(ComparisonDataset::new(samples, Provenance::Synthetic { seed }))
}

/// Random instance with every entry of `U` (`d x n`) and `w*` drawn from
/// `N(0, 1/d)`, i.e. standard deviation `1/sqrt(d)`.
///
/// `U` uses stream `(seed, [0])` and `w*` stream `(seed, [1])`.
pub fn synthetic_instance(d: usize, n: usize, seed: u64) -> Result<(FeatureMatrix, JudgmentVector)> {
    if d == 0 {
        return Err(Error::Dimension("d must be at least 1".into()));
    }
    let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut r = rng::stream(seed, &[0]);
    let columns = (0..n)
        .map(|_| (0..d).map(|_| normal.sample(&mut r)).collect())
        .collect();
    let u = FeatureMatrix::from_columns(columns)?;
    let mut r = rng::stream(seed, &[1]);
    let w = JudgmentVector::new((0..d).map(|_| normal.sample(&mut r)).collect())?;
    Ok((u, w))
}

/// Samples aggregated by unique pair, with each pair's masked difference
/// precomputed. Evaluates the objective and its derivatives.
#[derive(Debug, Clone)]
pub struct Design {
    d: usize,
    /// Row-major `pairs x d` masked differences.
    x: Vec<f64>,
    wins: Vec<f64>,
    losses: Vec<f64>,
    samples: usize,
}

/// Objective value with optional derivatives.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<SymMatrix>,
}

impl Design {
    pub fn new(u: &FeatureMatrix, sel: &RealizedSelection, data: &ComparisonDataset) -> Result<Self> {
        sel.check_matches(u)?;
        data.check_items(u.n())?;
        let d = u.d();
        let counts = data.pair_counts();
        let mut x = vec![0.0; counts.len() * d];
        let mut wins = Vec::with_capacity(counts.len());
        let mut losses = Vec::with_capacity(counts.len());
        for (row, (&(i, j), &(wi, wj))) in counts.iter().enumerate() {
            sel.masked_difference_into(u, i, j, &mut x[row * d..(row + 1) * d]);
            wins.push(wi as f64);
            losses.push(wj as f64);
        }
        Ok(Self {
            d,
            x,
            wins,
            losses,
            samples: data.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_samples(&self) -> usize {
        self.samples
    }

    pub fn num_pairs(&self) -> usize {
        self.wins.len()
    }

    fn rows(&self) -> impl Iterator<Item = (&[f64], f64, f64)> {
        self.x
            .chunks_exact(self.d)
            .zip(self.wins.iter().zip(&self.losses))
            .map(|(x, (&w, &l))| (x, w, l))
    }

    /// `sum_l [log(1 + e^u_l) - y_l u_l] + mu ||w||^2`.
    pub fn value(&self, w: &[f64], mu: f64) -> f64 {
        let loss: f64 = self
            .rows()
            .map(|(x, wins, losses)| {
                let u = dot(w, x);
                // log(1+e^u) - u = log(1+e^-u) keeps precision when the winner is favored.
                wins * softplus(-u) + losses * softplus(u)
            })
            .sum();
        loss + mu * dot(w, w)
    }

    pub fn evaluate(&self, w: &[f64], mu: f64, with_hessian: bool) -> Evaluation {
        let d = self.d;
        let mut value = 0.0;
        let mut gradient = vec![0.0; d];
        let mut hessian = with_hessian.then(|| SymMatrix::zeros(d));
        for (x, wins, losses) in self.rows() {
            let u = dot(w, x);
            value += wins * softplus(-u) + losses * softplus(u);
            let coef = (wins + losses) * sigmoid(u) - wins;
            for (g, xk) in gradient.iter_mut().zip(x) {
                *g += coef * xk;
            }
            if let Some(h) = hessian.as_mut() {
                h.add_outer(x, (wins + losses) * hessian_weight(u));
            }
        }
        value += mu * dot(w, w);
        for (g, wk) in gradient.iter_mut().zip(w) {
            *g += 2.0 * mu * wk;
        }
        if let Some(h) = hessian.as_mut() {
            h.add_diagonal(2.0 * mu);
        }
        Evaluation {
            value,
            gradient,
            hessian,
        }
    }
}

fn design_for(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
    data: &ComparisonDataset,
    mu: f64,
) -> Result<Design> {
    u.check_weights(w)?;
    if !(mu >= 0.0) {
        return Err(Error::InvalidConfig(format!("ridge weight must be >= 0, got {mu}")));
    }
    Design::new(u, sel, data)
}

/// Regularized negative log-likelihood.
pub fn nll(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
    data: &ComparisonDataset,
    mu: f64,
) -> Result<f64> {
    Ok(design_for(u, w, sel, data, mu)?.value(w.as_slice(), mu))
}

/// Gradient of [`nll`].
pub fn nll_gradient(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
    data: &ComparisonDataset,
    mu: f64,
) -> Result<Vec<f64>> {
    Ok(design_for(u, w, sel, data, mu)?
        .evaluate(w.as_slice(), mu, false)
        .gradient)
}

/// Hessian of [`nll`].
pub fn nll_hessian(
    u: &FeatureMatrix,
    w: &JudgmentVector,
    sel: &RealizedSelection,
    data: &ComparisonDataset,
    mu: f64,
) -> Result<SymMatrix> {
    Ok(design_for(u, w, sel, data, mu)?
        .evaluate(w.as_slice(), mu, true)
        .hessian
        .expect("hessian requested"))
}
