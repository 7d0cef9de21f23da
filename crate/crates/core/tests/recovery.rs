//! Estimation on synthetic data.

use salient_core::ranking::{kendall_correlation, rank_from_weights};
use salient_core::{fit, sample_comparisons, synthetic_instance, FitConfig, RealizedSelection, SelectionSpec};

#[test]
fn recovers_weights_with_many_samples() {
    let mut close = 0;
    for seed in 0..20 {
        let (u, w_star) = synthetic_instance(5, 40, seed).unwrap();
        let sel = RealizedSelection::new(SelectionSpec::Full, &u).unwrap();
        let data = sample_comparisons(&u, &w_star, &sel, 50_000, seed + 100).unwrap();
        let r = fit(&u, &sel, &data, &FitConfig::default()).unwrap();
        assert!(r.converged);
        if r.w_hat.distance(&w_star) <= 0.1 {
            close += 1;
        }
    }
    assert!(close >= 18, "only {close}/20 fits within 0.1");
}

#[test]
fn recovers_ranking_under_top_t_selection() {
    let (u, w_star) = synthetic_instance(4, 30, 7).unwrap();
    let sel = RealizedSelection::new(SelectionSpec::TopT { t: 2 }, &u).unwrap();
    let data = sample_comparisons(&u, &w_star, &sel, 40_000, 8).unwrap();
    let r = fit(&u, &sel, &data, &FitConfig::default()).unwrap();
    let tau = kendall_correlation(
        &rank_from_weights(&u, &w_star).unwrap(),
        &rank_from_weights(&u, &r.w_hat).unwrap(),
    )
    .unwrap();
    assert!(tau > 0.9, "tau {tau}");
}
