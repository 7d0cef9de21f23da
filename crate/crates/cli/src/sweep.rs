//! Grid sweeps over selection rules, sample sizes and seeds.
//!
//! Each seed fixes one synthetic instance `(U, w*)`, shared by every
//! selection and sample size so cells are paired. Cell `(s, m, seed)` samples
//! its comparisons from stream `(seed, [2, s, m])`.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use salient_core::dataio::read_json;
use salient_core::diagnostics::model_probabilities;
use salient_core::rng;
use salient_core::{
    count_transitivity_violations, fit, kendall_correlation, pairwise_inconsistency, rank_from_weights,
    sample_comparisons, synthetic_instance, FitConfig, RealizedSelection, Reference, SelectionSpec,
};

use crate::manifest::RunManifest;
use crate::{usage, SweepArgs};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub d: usize,
    pub n: usize,
    pub selections: Vec<SelectionSpec>,
    pub m: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mu: f64,
}

impl SweepSpec {
    fn validate(&self) -> anyhow::Result<()> {
        if self.d == 0 || self.n < 2 {
            return Err(usage("sweep needs d >= 1 and n >= 2"));
        }
        if self.selections.is_empty() || self.m.is_empty() || self.seeds.is_empty() {
            return Err(usage("sweep needs at least one selection, sample size and seed"));
        }
        if self.m.contains(&0) {
            return Err(usage("sample sizes must be >= 1"));
        }
        if !(self.mu >= 0.0) {
            return Err(usage("mu must be >= 0"));
        }
        for s in &self.selections {
            s.validate(self.d).map_err(|e| usage(e.to_string()))?;
        }
        Ok(())
    }
}

/// One output row: `selection,m,seed,metric,value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub selection: usize,
    pub m: usize,
    pub seed: u64,
    pub metric: &'static str,
    pub value: f64,
}

fn run_cell(spec: &SweepSpec, s: usize, m: usize, seed: u64) -> anyhow::Result<Vec<Row>> {
    let (u, w_star) = synthetic_instance(spec.d, spec.n, seed)?;
    let sel = RealizedSelection::new(spec.selections[s].clone(), &u)?;
    let data = sample_comparisons(&u, &w_star, &sel, m, rng::derive_seed(seed, &[2, s as u64, m as u64]))?;
    let result = fit(&u, &sel, &data, &FitConfig::with_mu(spec.mu))?;

    let truth = rank_from_weights(&u, &w_star)?;
    let estimated = rank_from_weights(&u, &result.w_hat)?;
    let probs = model_probabilities(&u, &w_star, &sel)?;
    let inconsistency = pairwise_inconsistency(&probs, Reference::Ranking(&truth))?;

    let mut metrics = vec![
        ("l2_error", result.w_hat.distance(&w_star)),
        ("kendall_tau", kendall_correlation(&truth, &estimated)?),
        ("converged", if result.converged { 1.0 } else { 0.0 }),
        ("iterations", result.iterations as f64),
        ("inconsistency_rate", inconsistency.rate),
    ];
    if spec.n >= 3 {
        let t = count_transitivity_violations(&probs, None)?;
        metrics.extend([
            ("strong_violation_rate", t.strong_rate.unwrap_or(0.0)),
            ("moderate_violation_rate", t.moderate_rate.unwrap_or(0.0)),
            ("weak_violation_rate", t.weak_rate.unwrap_or(0.0)),
        ]);
    }
    Ok(metrics
        .into_iter()
        .map(|(metric, value)| Row {
            selection: s,
            m,
            seed,
            metric,
            value,
        })
        .collect())
}

/// Runs every cell and returns rows sorted by selection (spec order), `m`,
/// seed and metric name.
pub fn run_grid(spec: &SweepSpec) -> anyhow::Result<Vec<Row>> {
    spec.validate()?;
    let cells: Vec<(usize, usize, u64)> = (0..spec.selections.len())
        .flat_map(|s| spec.m.iter().flat_map(move |&m| spec.seeds.iter().map(move |&seed| (s, m, seed))))
        .collect();
    let per_cell: Vec<Vec<Row>> = cells
        .par_iter()
        .map(|&(s, m, seed)| {
            run_cell(spec, s, m, seed).with_context(|| format!("cell selection={} m={m} seed={seed}", spec.selections[s]))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut rows: Vec<Row> = per_cell.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.selection, a.m, a.seed, a.metric).cmp(&(b.selection, b.m, b.seed, b.metric))
    });
    Ok(rows)
}

pub fn write_rows(path: &Path, spec: &SweepSpec, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["selection", "m", "seed", "metric", "value"])?;
    for r in rows {
        w.write_record([
            spec.selections[r.selection].to_string(),
            r.m.to_string(),
            r.seed.to_string(),
            r.metric.to_string(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(a: &SweepArgs) -> anyhow::Result<()> {
    let spec: SweepSpec = read_json(&a.spec).map_err(|e| usage(format!("{}: {e}", a.spec.display())))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        if t == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        pool = pool.num_threads(t);
    }
    let rows = pool.build()?.install(|| run_grid(&spec))?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let out = a.out_dir.join("sweep.csv");
    write_rows(&out, &spec, &rows)?;
    RunManifest::new("sweep", a, None)?
        .inputs([a.spec.as_path()])?
        .output(&out)
        .write_in(&a.out_dir)
}
