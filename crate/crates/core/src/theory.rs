//! Sample-complexity certificates for the maximum likelihood estimator.
//!
//! With `x` the masked difference of a uniformly chosen pair and `Z = x x^T`,
//! all expectations below are exact averages over the `C(n, 2)` pairs:
//!
//! - `lambda = lambda_min(E Z)`
//! - `eta = lambda_max(E[(Z - E Z)^2])`
//! - `zeta = max_pairs lambda_max(E Z - Z)`
//! - `beta = max_pairs ||x||_inf`
//! - `b_star = max_pairs |<w*, x>|`
//!
//! Unbounded sample requirements and error bounds (`lambda` at or below the
//! tolerance, an empty coordinate class, a zero gap) are `f64::INFINITY`,
//! written to JSON as the string `"inf"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fit, max_contextual_gap, FitConfig};
use crate::features::{FeatureMatrix, JudgmentVector};
use crate::linalg::{norm_inf, numerical_rank, SymMatrix};
use crate::model::sample_comparisons;
use crate::ranking::alpha_gaps;
use crate::rng;
use crate::selection::{num_pairs, pairs, RealizedSelection};

/// Relative singular-value cutoff for the rank test.
pub const RANK_TOL: f64 = 1e-10;
/// `lambda` counts as zero at or below `LAMBDA_TOL * trace(E Z) / d`.
pub const LAMBDA_TOL: f64 = 1e-10;

/// Serializes non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod extended_float {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct FloatVisitor;

    impl<'de> Visitor<'de> for FloatVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(FloatVisitor)
    }
}

/// `4 (1 + e^b)^2 / e^b`, written so large `b` does not overflow early.
fn link_factor(b: f64) -> f64 {
    let h = 0.5 * b;
    4.0 * ((-h).exp() + h.exp()).powi(2)
}

/// `3 beta^2 log(4d/delta) d + 4 sqrt(d) beta log(4d/delta)`.
fn spread_term(beta: f64, d: usize, delta: f64) -> f64 {
    let d_f = d as f64;
    let l4 = (4.0 * d_f / delta).ln();
    3.0 * beta * beta * l4 * d_f + 4.0 * d_f.sqrt() * beta * l4
}

/// `coef * sqrt(spread / (6 m))`; scaling `m` by 4 halves it exactly.
fn scaled_bound(coef: f64, spread: f64, m: f64) -> f64 {
    if !coef.is_finite() {
        return f64::INFINITY;
    }
    coef * (spread / (6.0 * m)).sqrt()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("delta must be in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Masked differences for all pairs, pair-major.
fn masked_differences(u: &FeatureMatrix, sel: &RealizedSelection) -> Result<Vec<f64>> {
    sel.check_matches(u)?;
    let d = u.d();
    let mut rows = vec![0.0; num_pairs(u.n()) * d];
    for (row, (i, j)) in rows.chunks_exact_mut(d).zip(pairs(u.n())) {
        sel.masked_difference_into(u, i, j, row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identifiability {
    pub rank: usize,
    pub d: usize,
    pub identifiable: bool,
}

/// Rank of the `C(n, 2) x d` masked-difference matrix; identifiable iff `rank = d`.
pub fn identifiability(u: &FeatureMatrix, sel: &RealizedSelection) -> Result<Identifiability> {
    let rows = masked_differences(u, sel)?;
    let rank = numerical_rank(&rows, num_pairs(u.n()), u.d(), RANK_TOL);
    Ok(Identifiability {
        rank,
        d: u.d(),
        identifiable: rank == u.d(),
    })
}

/// Spectral summary of the masked differences.
#[derive(Debug, Clone)]
pub struct PairMoments {
    /// `E Z`.
    pub mean: SymMatrix,
    /// `E[(Z - E Z)^2]`.
    pub second_central: SymMatrix,
    pub lambda: f64,
    pub eta: f64,
    pub zeta: f64,
    pub beta: f64,
    /// Smallest `||x||_inf` over pairs.
    pub epsilon: f64,
}

/// Exact pair averages. `E[(Z - EZ)^2]` uses `Z^2 = ||x||^2 x x^T`.
pub fn pair_moments(u: &FeatureMatrix, sel: &RealizedSelection) -> Result<PairMoments> {
    let rows = masked_differences(u, sel)?;
    let d = u.d();
    let c = num_pairs(u.n()) as f64;
    let mut mean = SymMatrix::zeros(d);
    let mut z_sq = SymMatrix::zeros(d);
    let mut beta: f64 = 0.0;
    let mut epsilon = f64::INFINITY;
    for x in rows.chunks_exact(d) {
        mean.add_outer(x, 1.0 / c);
        z_sq.add_outer(x, crate::linalg::dot(x, x) / c);
        let ni = norm_inf(x);
        beta = beta.max(ni);
        epsilon = epsilon.min(ni);
    }
    let second_central = z_sq.sub(&mean.square());
    let mut zeta = f64::NEG_INFINITY;
    for x in rows.chunks_exact(d) {
        let mut m = mean.clone();
        m.add_outer(x, -1.0);
        zeta = zeta.max(m.max_eigenvalue());
    }
    Ok(PairMoments {
        lambda: mean.min_eigenvalue().max(0.0),
        eta: second_central.max_eigenvalue().max(0.0),
        zeta,
        beta,
        epsilon,
        mean,
        second_central,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub d: usize,
    pub n: usize,
    pub lambda: f64,
    pub eta: f64,
    pub zeta: f64,
    pub beta: f64,
    pub b_star: Option<f64>,
    pub identifiable: bool,
    /// Threshold `lambda` had to exceed.
    pub lambda_tol: f64,
    pub delta: f64,
    #[serde(with = "extended_float")]
    pub m1: f64,
    #[serde(with = "extended_float")]
    pub m2: f64,
    /// `error_bound(m) = error_bound_coefficient * sqrt(m1 / m)`; absent without `w*`.
    #[serde(with = "opt_extended_float", default)]
    pub error_bound_coefficient: Option<f64>,
}

/// `Option<f64>` counterpart of [`extended_float`].
mod opt_extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::extended_float")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

impl TheoryReport {
    /// Bound on `||w_hat - w*||_2` after `m` samples; `None` without `w*`.
    pub fn error_bound(&self, m: f64) -> Option<f64> {
        self.error_bound_coefficient
            .map(|coef| scaled_bound(coef, 6.0 * self.m1, m))
    }

    /// `max(m1, m2)`.
    pub fn sample_requirement(&self) -> f64 {
        self.m1.max(self.m2)
    }
}

pub fn theorem1_report(
    u: &FeatureMatrix,
    sel: &RealizedSelection,
    w_star: Option<&JudgmentVector>,
    delta: f64,
) -> Result<TheoryReport> {
    check_delta(delta)?;
    let mo = pair_moments(u, sel)?;
    let d = u.d();
    let b_star = w_star.map(|w| max_contextual_gap(u, sel, w)).transpose()?;
    let lambda_tol = LAMBDA_TOL * mo.mean.trace() / d as f64;
    let identifiable = mo.lambda > lambda_tol;
    let spread = spread_term(mo.beta, d, delta);
    let l2 = (2.0 * d as f64 / delta).ln();
    let (m2, coef) = if identifiable {
        (
            8.0 * l2 * (6.0 * mo.eta + mo.lambda * mo.zeta) / (3.0 * mo.lambda * mo.lambda),
            b_star.map(|b| link_factor(b) / mo.lambda),
        )
    } else {
        (f64::INFINITY, b_star.map(|_| f64::INFINITY))
    };
    Ok(TheoryReport {
        d,
        n: u.n(),
        lambda: mo.lambda,
        eta: mo.eta,
        zeta: mo.zeta,
        beta: mo.beta,
        b_star,
        identifiable,
        lambda_tol,
        delta,
        m1: spread / 6.0,
        m2,
        error_bound_coefficient: coef,
    })
}

/// Closed forms for full-feature comparisons on centered features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary1Report {
    pub nu: f64,
    /// Extreme eigenvalues of `U U^T` for the centered `U`.
    pub lambda_min_uut: f64,
    pub lambda_max_uut: f64,
    pub lambda_closed: f64,
    pub zeta_upper: f64,
    pub eta_upper: f64,
    pub beta: f64,
    pub delta: f64,
    #[serde(with = "extended_float")]
    pub m1: f64,
    #[serde(with = "extended_float")]
    pub m_lower: f64,
}

impl Corollary1Report {
    pub fn error_bound(&self, m: f64, b_star: f64) -> f64 {
        scaled_bound(link_factor(b_star) / self.lambda_closed, 6.0 * self.m1, m)
    }
}

pub fn corollary1_report(u: &FeatureMatrix, delta: f64) -> Result<Corollary1Report> {
    check_delta(delta)?;
    let (d, n) = (u.d(), u.n());
    if n <= d {
        return Err(Error::Precondition(format!(
            "full-feature bounds need n > d (n = {n}, d = {d})"
        )));
    }
    let centered = u.center_columns();
    let mut uut = SymMatrix::zeros(d);
    for col in centered.columns() {
        uut.add_outer(col, 1.0);
    }
    let eig = uut.eigenvalues();
    let (lmin, lmax) = (eig[0].max(0.0), eig[d - 1]);

    let c = num_pairs(n) as f64;
    let n_f = n as f64;
    let mut max_sq: f64 = 0.0;
    let mut beta: f64 = 0.0;
    for (i, j) in pairs(n) {
        let x = centered.difference(i, j);
        max_sq = max_sq.max(crate::linalg::dot(&x, &x));
        beta = beta.max(norm_inf(&x));
    }
    let nu = max_sq.max(1.0);
    let r = n_f * lmax / c;
    let zeta_upper = nu + r;
    let eta_upper = nu * r + r * r;
    let lambda_closed = n_f * lmin / c;

    let spread = spread_term(beta, d, delta);
    let m1 = spread / 6.0;
    let l2 = (2.0 * d as f64 / delta).ln();
    let second = if lmin > 0.0 {
        48.0 * l2 * c * c / (3.0 * n_f * n_f * lmin * lmin) * eta_upper
            + 8.0 * l2 * c / (3.0 * n_f * lmin) * zeta_upper
    } else {
        f64::INFINITY
    };
    Ok(Corollary1Report {
        nu,
        lambda_min_uut: lmin,
        lambda_max_uut: lmax,
        lambda_closed,
        zeta_upper,
        eta_upper,
        beta,
        delta,
        m1,
        m_lower: m1.max(second),
    })
}

/// Bounds for selections that compare each pair on a single coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary2Report {
    /// `|P_k|`: number of pairs compared on coordinate `k`.
    pub partition_sizes: Vec<usize>,
    pub epsilon: f64,
    pub beta: f64,
    pub lambda_lower: f64,
    pub zeta_upper: f64,
    pub eta_upper: f64,
    pub delta: f64,
    #[serde(with = "extended_float")]
    pub m1: f64,
    #[serde(with = "extended_float")]
    pub m3: f64,
}

impl Corollary2Report {
    /// `max(m1, m3)`.
    pub fn sample_requirement(&self) -> f64 {
        self.m1.max(self.m3)
    }

    pub fn error_bound(&self, m: f64, b_star: f64) -> f64 {
        if !(self.lambda_lower > 0.0) {
            return f64::INFINITY;
        }
        scaled_bound(link_factor(b_star) / self.lambda_lower, 6.0 * self.m1, m)
    }
}

pub fn corollary2_report(
    u: &FeatureMatrix,
    sel: &RealizedSelection,
    delta: f64,
) -> Result<Corollary2Report> {
    check_delta(delta)?;
    sel.check_matches(u)?;
    let parts = sel.partition_by_coordinate()?;
    let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
    let mut beta: f64 = 0.0;
    let mut epsilon = f64::INFINITY;
    for (i, j) in pairs(u.n()) {
        let x = sel.masked_difference(u, i, j)?;
        beta = beta.max(norm_inf(&x));
        epsilon = epsilon.min(norm_inf(&x));
    }
    let c = num_pairs(u.n()) as f64;
    let pmin = *sizes.iter().min().expect("d >= 1") as f64;
    let pmax = *sizes.iter().max().expect("d >= 1") as f64;
    let b2 = beta * beta;
    let e2 = epsilon * epsilon;

    let lambda_lower = e2 * pmin / c;
    let zeta_upper = b2 + b2 * pmax / c;
    let eta_upper = b2 * b2 / c
        * sizes
            .iter()
            .map(|&p| p as f64 + (p * p) as f64 / c)
            .fold(0.0, f64::max);

    let d = u.d();
    let m1 = spread_term(beta, d, delta) / 6.0;
    let l2 = (2.0 * d as f64 / delta).ln();
    let m3 = if pmin > 0.0 && epsilon > 0.0 {
        let spread_sq = sizes
            .iter()
            .map(|&p| c * p as f64 + (p * p) as f64)
            .fold(0.0, f64::max);
        48.0 * l2 * b2 * b2 * spread_sq / (3.0 * e2 * e2 * pmin * pmin)
            + 8.0 * l2 * b2 * (c + pmax) / (3.0 * e2 * pmin)
    } else {
        f64::INFINITY
    };
    Ok(Corollary2Report {
        partition_sizes: sizes,
        epsilon,
        beta,
        lambda_lower,
        zeta_upper,
        eta_upper,
        delta,
        m1,
        m3,
    })
}

/// Sample requirement for recovering the ranking up to `k - 1` discordant pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary3Report {
    /// Absolute full-feature utility gaps, ascending.
    pub alpha: Vec<f64>,
    pub k: usize,
    pub alpha_k: f64,
    #[serde(rename = "M")]
    pub max_feature_norm: f64,
    pub b_star: f64,
    pub c5: f64,
    pub delta: f64,
    /// The three lower bounds on `m`; the third depends on `c5` and `alpha_k`.
    #[serde(with = "three_extended")]
    pub m_terms: [f64; 3],
    #[serde(with = "extended_float")]
    pub m_required: f64,
    /// Kendall distance bound `k - 1`.
    pub predicted_kendall_bound: usize,
    pub guarantee: String,
}

mod three_extended {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::extended_float")] f64);

    pub fn serialize<S: Serializer>(v: &[f64; 3], s: S) -> Result<S::Ok, S::Error> {
        [Wrap(v[0]), Wrap(v[1]), Wrap(v[2])].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
        let [a, b, c] = <[Wrap; 3]>::deserialize(d)?;
        Ok([a.0, b.0, c.0])
    }
}

pub fn corollary3_report(
    u: &FeatureMatrix,
    w_star: &JudgmentVector,
    sel: &RealizedSelection,
    k: usize,
    delta: f64,
    c5: f64,
) -> Result<Corollary3Report> {
    let total = num_pairs(u.n());
    if k == 0 || k > total {
        return Err(Error::InvalidConfig(format!("k must be in 1..={total}, got {k}")));
    }
    if !(c5 > 0.0) || !c5.is_finite() {
        return Err(Error::InvalidConfig(format!("c5 must be finite and > 0, got {c5}")));
    }
    let t1 = theorem1_report(u, sel, Some(w_star), delta)?;
    let gaps = alpha_gaps(u, w_star)?;
    let alpha_k = gaps.alpha(k).expect("k checked against the pair count");
    let b_star = t1.b_star.expect("w* given");
    let big_m = gaps.max_norm;
    let d_f = u.d() as f64;
    let l4 = (4.0 * d_f / delta).ln();
    let third = if alpha_k > 0.0 && t1.identifiable {
        c5 * big_m * big_m * (2.0 * b_star).exp() * (t1.beta * t1.beta * d_f + t1.beta * d_f.sqrt()) * l4
            / (alpha_k * alpha_k * t1.lambda * t1.lambda)
    } else {
        f64::INFINITY
    };
    let m_terms = [t1.m1, t1.m2, third];
    let m_required = m_terms.iter().copied().fold(0.0, f64::max);
    Ok(Corollary3Report {
        alpha: gaps.gaps,
        k,
        alpha_k,
        max_feature_norm: big_m,
        b_star,
        c5,
        delta,
        m_terms,
        m_required,
        predicted_kendall_bound: k - 1,
        guarantee: format!(
            "with m >= {m_required} samples, kendall_distance(true, estimated) <= {} with probability >= {}",
            k - 1,
            1.0 - delta
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GuaranteeCheck {
    /// `m` is below `max(m1, m2)`, so the theorem makes no claim.
    NotApplicable {
        m: usize,
        #[serde(with = "extended_float")]
        required: f64,
    },
    Checked {
        m: usize,
        trials: usize,
        passes: usize,
        pass_rate: f64,
        error_bound: f64,
        /// `||w_hat - w*||_2` per trial.
        errors: Vec<f64>,
    },
}

/// Repeats sample-and-fit `trials` times and counts errors within the bound.
///
/// Trial `t` samples with seed `derive_seed(seed, [t])` and fits without ridge.
pub fn empirical_guarantee_check(
    u: &FeatureMatrix,
    w_star: &JudgmentVector,
    sel: &RealizedSelection,
    m: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<GuaranteeCheck> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let report = theorem1_report(u, sel, Some(w_star), delta)?;
    if !report.identifiable {
        return Err(Error::Precondition(
            "the instance is not identifiable, so no error bound exists".into(),
        ));
    }
    let required = report.sample_requirement();
    if (m as f64) < required {
        return Ok(GuaranteeCheck::NotApplicable { m, required });
    }
    let bound = report.error_bound(m as f64).expect("w* given");
    let cfg = FitConfig::default();
    let mut errors = Vec::with_capacity(trials);
    for t in 0..trials {
        let data = sample_comparisons(u, w_star, sel, m, rng::derive_seed(seed, &[t as u64]))?;
        let fitted = fit(u, sel, &data, &cfg)?;
        errors.push(fitted.w_hat.distance(w_star));
    }
    let passes = errors.iter().filter(|&&e| e <= bound).count();
    Ok(GuaranteeCheck::Checked {
        m,
        trials,
        passes,
        pass_rate: passes as f64 / trials as f64,
        error_bound: bound,
        errors,
    })
}
