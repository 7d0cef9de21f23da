//! Shared fixtures for the benchmarks.

use salient_core::{sample_comparisons, synthetic_instance, ComparisonDataset, FeatureMatrix, JudgmentVector};
use salient_core::{RealizedSelection, SelectionSpec};

pub struct Fixture {
    pub u: FeatureMatrix,
    pub w_star: JudgmentVector,
    pub sel: RealizedSelection,
    pub data: ComparisonDataset,
}

/// Synthetic instance with `m` sampled comparisons.
pub fn fixture(d: usize, n: usize, m: usize, spec: SelectionSpec, seed: u64) -> Fixture {
    let (u, w_star) = synthetic_instance(d, n, seed).expect("valid sizes");
    let sel = RealizedSelection::new(spec, &u).expect("valid selection");
    let data = sample_comparisons(&u, &w_star, &sel, m, seed).expect("valid sample");
    Fixture { u, w_star, sel, data }
}
