//! Salient feature preference model.
//!
//! Items carry feature vectors `U_i`. When two items are compared, only the
//! features picked by a selection function `tau(i, j)` are consulted, and
//!
//! ```text
//! P(i beats j) = sigmoid(<w, mask(U_i - U_j, tau(i, j))>)
//! ```
//!
//! The judgment vector `w` is learned by convex maximum likelihood
//! ([`estimator::fit`]); sorting items by full-feature utility `<w, U_i>`
//! gives the ranking ([`ranking::rank_from_weights`]). Because each pair sees
//! a different subset of features, the model can produce intransitive
//! preferences ([`diagnostics`]). [`theory`] computes identifiability and
//! sample-complexity certificates for a given feature matrix and selection.
//!
//! Items are 0-based indices into the feature matrix throughout.
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod features;
pub mod linalg;
pub mod model;
pub mod ranking;
pub mod rng;
pub mod selection;
pub mod theory;

pub use diagnostics::{
    count_transitivity_violations, empirical_pair_stats, model_transitivity_report, pairwise_inconsistency,
    InconsistencyReport, PairProbabilities, PairStats, Reference, TransitivityReport,
};
pub use error::{Error, Result};
pub use estimator::{fit, FitConfig, FitResult, Init};
pub use features::{mask, FeatureMatrix, FeatureSubset, JudgmentVector};
pub use model::{
    nll, nll_gradient, nll_hessian, prob_beats, sample_comparisons, synthetic_instance, ComparisonDataset,
    ComparisonSample, Provenance,
};
pub use ranking::{kendall_correlation, kendall_distance, rank_from_weights, Ranking};
pub use selection::{RealizedSelection, SelectionSpec};
pub use theory::{
    corollary1_report, corollary2_report, corollary3_report, empirical_guarantee_check, identifiability,
    theorem1_report, Corollary1Report, Corollary2Report, Corollary3Report, GuaranteeCheck, TheoryReport,
};
