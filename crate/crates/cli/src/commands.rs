use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use salient_core::dataio::{
    load_comparisons, load_comparisons_by_id, load_features, load_rankings, load_weights, read_features,
    write_comparisons, write_features, write_json, write_rankings, RankerRanking,
};
use salient_core::diagnostics::{model_probabilities, InconsistencyReport, TransitivityReport};
use salient_core::ranking::pairwise_accuracy;
use salient_core::rng;
use salient_core::selection::num_pairs;
use salient_core::theory::Identifiability;
use salient_core::{
    corollary1_report, corollary2_report, corollary3_report, count_transitivity_violations, empirical_pair_stats,
    identifiability, kendall_correlation, pairwise_inconsistency, rank_from_weights, sample_comparisons,
    synthetic_instance, theorem1_report, Corollary1Report, Corollary2Report, Corollary3Report, FeatureMatrix,
    FitConfig, Init, JudgmentVector, RealizedSelection, Reference, SelectionSpec, TheoryReport,
};

use crate::manifest::RunManifest;
use crate::{usage, DiagnoseArgs, EvaluateArgs, FeatureOpts, FitArgs, RankArgs, SimulateArgs, TheoryArgs};

pub fn realize(spec: &SelectionSpec, u: &FeatureMatrix) -> anyhow::Result<RealizedSelection> {
    spec.validate(u.d()).map_err(|e| usage(e.to_string()))?;
    Ok(RealizedSelection::new(spec.clone(), u)?)
}

fn features(opts: &FeatureOpts) -> anyhow::Result<(FeatureMatrix, Vec<&Path>)> {
    let loaded = load_features(&opts.features, opts.standardize, opts.stats_from.as_deref())?;
    let mut inputs = vec![opts.features.as_path()];
    inputs.extend(opts.stats_from.as_deref());
    Ok((loaded.features, inputs))
}

fn weights_for(path: &Path, u: &FeatureMatrix) -> anyhow::Result<JudgmentVector> {
    let w = load_weights(path)?;
    if w.dim() != u.d() {
        anyhow::bail!("{} has {} weights but features have d = {}", path.display(), w.dim(), u.d());
    }
    Ok(w)
}

#[derive(Serialize)]
struct Truth<'a> {
    w_star: &'a JudgmentVector,
    selection: &'a SelectionSpec,
    d: usize,
    n: usize,
    m: usize,
    seed: u64,
}

pub fn simulate(a: &SimulateArgs) -> anyhow::Result<()> {
    if a.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    a.selection.validate(a.d).map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;

    let (u, w_star) = synthetic_instance(a.d, a.n, a.seed)?;
    let sel = RealizedSelection::new(a.selection.clone(), &u)?;
    let data = sample_comparisons(&u, &w_star, &sel, a.m, rng::derive_seed(a.seed, &[2]))?;

    let features_path = a.out_dir.join("features.csv");
    let comparisons_path = a.out_dir.join("comparisons.csv");
    let truth_path = a.out_dir.join("truth.json");
    write_features(&features_path, &u)?;
    write_comparisons(&comparisons_path, &u, &data)?;
    write_json(
        &truth_path,
        &Truth {
            w_star: &w_star,
            selection: &a.selection,
            d: a.d,
            n: a.n,
            m: a.m,
            seed: a.seed,
        },
    )?;
    RunManifest::new("simulate", a, Some(a.seed))?
        .output(&features_path)
        .output(&comparisons_path)
        .output(&truth_path)
        .write_in(&a.out_dir)
}

pub fn fit(a: &FitArgs) -> anyhow::Result<()> {
    let (u, mut inputs) = features(&a.features)?;
    let sel = realize(&a.selection, &u)?;
    let data = load_comparisons(&a.comparisons, &u, a.min_count)?;
    inputs.push(&a.comparisons);
    let cfg = FitConfig {
        mu: a.mu,
        tol_grad: a.tol,
        max_iters: a.max_iters,
        init: Init::Zeros,
    };
    let result = salient_core::fit(&u, &sel, &data, &cfg)?;
    if !result.converged {
        log::warn!(
            "stopped after {} iterations with gradient norm {}",
            result.iterations,
            result.final_grad_norm
        );
    }
    write_json(&a.out, &result)?;
    RunManifest::new("fit", a, None)?
        .inputs(inputs)?
        .output(&a.out)
        .write_beside(&a.out)
}

pub fn rank(a: &RankArgs) -> anyhow::Result<()> {
    let (u, mut inputs) = features(&a.features)?;
    let w = weights_for(&a.weights, &u)?;
    inputs.push(&a.weights);
    let ranking = rank_from_weights(&u, &w)?;
    write_rankings(
        &a.out,
        &u,
        &[RankerRanking {
            ranker_id: "estimated".into(),
            ranking,
        }],
    )?;
    RunManifest::new("rank", a, None)?
        .inputs(inputs)?
        .output(&a.out)
        .write_beside(&a.out)
}

#[derive(Serialize)]
struct RankerScore {
    ranker_id: String,
    items: usize,
    tau: f64,
}

#[derive(Serialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
enum Evaluation {
    KendallTau {
        rankers: usize,
        mean: f64,
        /// Population standard deviation across rankers.
        std: f64,
        per_ranker: Vec<RankerScore>,
    },
    PairwiseAccuracy {
        accuracy: f64,
        samples: usize,
        pairs: usize,
    },
}

pub fn evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    let (u, mut inputs) = features(&a.features)?;
    let w = weights_for(&a.weights, &u)?;
    inputs.push(&a.weights);
    let report = if let Some(path) = &a.rankings {
        inputs.push(path);
        let estimated = rank_from_weights(&u, &w)?;
        let mut per_ranker = Vec::new();
        for r in load_rankings(path, &u)? {
            let restricted = estimated.restrict_to(r.ranking.order())?;
            per_ranker.push(RankerScore {
                tau: kendall_correlation(&r.ranking, &restricted)?,
                items: r.ranking.len(),
                ranker_id: r.ranker_id,
            });
        }
        if per_ranker.is_empty() {
            anyhow::bail!("{} has no ranker with at least two known items", path.display());
        }
        let k = per_ranker.len() as f64;
        let mean = per_ranker.iter().map(|s| s.tau).sum::<f64>() / k;
        let var = per_ranker.iter().map(|s| (s.tau - mean).powi(2)).sum::<f64>() / k;
        Evaluation::KendallTau {
            rankers: per_ranker.len(),
            mean,
            std: var.sqrt(),
            per_ranker,
        }
    } else {
        let path = a.comparisons.as_ref().expect("clap requires one source");
        inputs.push(path);
        let sel = realize(&a.selection, &u)?;
        let data = load_comparisons(path, &u, a.min_count)?;
        Evaluation::PairwiseAccuracy {
            accuracy: pairwise_accuracy(&u, &w, &sel, &data)?,
            samples: data.len(),
            pairs: data.pair_counts().len(),
        }
    };
    write_json(&a.out, &report)?;
    RunManifest::new("evaluate", a, None)?
        .inputs(inputs)?
        .output(&a.out)
        .write_beside(&a.out)
}

#[derive(Serialize)]
struct EmpiricalDiagnosis {
    samples: usize,
    pairs: usize,
    transitivity: TransitivityReport,
}

#[derive(Serialize)]
struct Diagnosis {
    /// Item names by index, for reading the triple lists.
    item_ids: Vec<String>,
    min_count: u64,
    empirical: Option<EmpiricalDiagnosis>,
    model: Option<TransitivityReport>,
    /// Empirical majorities against model probabilities.
    inconsistency: Option<InconsistencyReport>,
}

pub fn diagnose(a: &DiagnoseArgs) -> anyhow::Result<()> {
    let mut inputs: Vec<&Path> = Vec::new();
    let u = match &a.features {
        Some(p) => {
            inputs.push(p);
            Some(read_features(p)?)
        }
        None => None,
    };
    let mut item_ids = u.as_ref().map(|u| u.item_ids().to_vec()).unwrap_or_default();

    let empirical = match &a.comparisons {
        Some(path) => {
            inputs.push(path);
            let data = match &u {
                Some(u) => load_comparisons(path, u, a.min_count)?,
                None => {
                    let (ids, data) = load_comparisons_by_id(path, a.min_count)?;
                    item_ids = ids;
                    data
                }
            };
            let probs = empirical_pair_stats(&data).probabilities();
            Some((data, probs))
        }
        None => None,
    };

    let model = match (&a.weights, &u, &a.selection) {
        (Some(wp), Some(u), Some(spec)) => {
            inputs.push(wp);
            let w = weights_for(wp, u)?;
            let sel = realize(spec, u)?;
            Some(model_probabilities(u, &w, &sel)?)
        }
        _ => None,
    };

    let inconsistency = match (&empirical, &model) {
        (Some((_, emp)), Some(m)) if !emp.is_empty() => Some(pairwise_inconsistency(emp, Reference::Probabilities(m))?),
        _ => None,
    };
    let report = Diagnosis {
        item_ids,
        min_count: a.min_count,
        empirical: empirical
            .map(|(data, p)| -> anyhow::Result<_> {
                Ok(EmpiricalDiagnosis {
                    samples: data.len(),
                    pairs: p.len(),
                    transitivity: count_transitivity_violations(&p, None)?,
                })
            })
            .transpose()?,
        model: model.map(|p| count_transitivity_violations(&p, None)).transpose()?,
        inconsistency,
    };
    write_json(&a.out, &report)?;
    RunManifest::new("diagnose", a, None)?
        .inputs(inputs)?
        .output(&a.out)
        .write_beside(&a.out)
}

#[derive(Serialize)]
struct TheoryOutput {
    identifiability: Identifiability,
    theorem1: TheoryReport,
    corollary1: Option<Corollary1Report>,
    corollary2: Option<Corollary2Report>,
    corollary3: Option<Corollary3Report>,
    /// Why a report that might apply was left out.
    notes: Vec<String>,
}

pub fn theory(a: &TheoryArgs) -> anyhow::Result<()> {
    let (u, mut inputs) = features(&a.features)?;
    let sel = realize(&a.selection, &u)?;
    let w = match &a.weights {
        Some(p) => {
            inputs.push(p);
            Some(weights_for(p, &u)?)
        }
        None => None,
    };
    let mut notes = Vec::new();

    let corollary1 = if matches!(a.selection, SelectionSpec::Full) {
        if u.n() > u.d() {
            Some(corollary1_report(&u, a.delta)?)
        } else {
            notes.push(format!("full-feature bounds need n > d (n = {}, d = {})", u.n(), u.d()));
            None
        }
    } else {
        None
    };
    let corollary2 = match sel.partition_by_coordinate() {
        Ok(_) => Some(corollary2_report(&u, &sel, a.delta)?),
        Err(_) => None,
    };
    let corollary3 = match &w {
        Some(w) => {
            if a.k > num_pairs(u.n()) {
                return Err(usage(format!("--k must be at most C(n, 2) = {}", num_pairs(u.n()))));
            }
            Some(corollary3_report(&u, w, &sel, a.k, a.delta, a.c5)?)
        }
        None => None,
    };
    let report = TheoryOutput {
        identifiability: identifiability(&u, &sel)?,
        theorem1: theorem1_report(&u, &sel, w.as_ref(), a.delta)?,
        corollary1,
        corollary2,
        corollary3,
        notes,
    };
    write_json(&a.out, &report)?;
    RunManifest::new("theory", a, None)?
        .inputs(inputs)?
        .output(&a.out)
        .write_beside(&a.out)
}
