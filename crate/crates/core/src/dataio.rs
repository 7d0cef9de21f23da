//! CSV and JSON file formats.
//!
//! - features: `item_id,f1,...,fd`, one row per item
//! - comparisons: `winner_id,loser_id,count`
//! - rankings: `ranker_id,rank,item_id`, ranks `1..k` per ranker
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, JudgmentVector};
use crate::model::{ComparisonDataset, ComparisonSample, Provenance};
use crate::ranking::Ranking;

pub const FEATURES_ID_COLUMN: &str = "item_id";
pub const COMPARISONS_HEADER: [&str; 3] = ["winner_id", "loser_id", "count"];
pub const RANKINGS_HEADER: [&str; 3] = ["ranker_id", "rank", "item_id"];

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Per-feature shift and scale applied by [`load_features`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation (divisor `n`).
    pub std: Vec<f64>,
    /// Features with zero spread: shifted but not scaled.
    pub constant_features: Vec<usize>,
}

impl Standardization {
    pub fn from_features(u: &FeatureMatrix) -> Self {
        let mean = u.column_mean();
        let n = u.n() as f64;
        let mut var = vec![0.0; u.d()];
        for col in u.columns() {
            for (k, v) in col.iter().enumerate() {
                var[k] += (v - mean[k]).powi(2);
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        let constant_features = (0..u.d()).filter(|&k| !(std[k] > 0.0)).collect();
        Self {
            mean,
            std,
            constant_features,
        }
    }

    pub fn apply(&self, u: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.mean.len() != u.d() {
            return Err(Error::Dimension(format!(
                "standardization has {} features, matrix has {}",
                self.mean.len(),
                u.d()
            )));
        }
        let columns = u
            .columns()
            .map(|col| {
                col.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let scale = if self.std[k] > 0.0 { self.std[k] } else { 1.0 };
                        (v - self.mean[k]) / scale
                    })
                    .collect()
            })
            .collect();
        FeatureMatrix::new(columns, u.item_ids().to_vec())
    }
}

#[derive(Debug, Clone)]
pub struct LoadedFeatures {
    pub features: FeatureMatrix,
    /// Present when standardization was requested.
    pub standardization: Option<Standardization>,
}

/// Reads a features file without transforming it.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let d = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once(FEATURES_ID_COLUMN.to_string())
        .chain((1..=d).map(|k| format!("f{k}")))
        .collect();
    if d == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(
            path,
            1,
            format!("expected header `item_id,f1,...,fd`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut ids = Vec::new();
    let mut columns = Vec::new();
    let mut seen = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != d + 1 {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", d + 1, rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty item_id"));
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(parse_err(path, line, format!("duplicate item_id `{id}` (first on line {first})")));
        }
        let col = (1..=d)
            .map(|k| {
                rec[k]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line, format!("f{k} = `{}` is not a finite number", &rec[k])))
            })
            .collect::<Result<Vec<f64>>>()?;
        ids.push(id);
        columns.push(col);
    }
    FeatureMatrix::new(columns, ids)
}

/// Loads features, optionally standardizing with stats from `stats_from`
/// (typically a training file) or else from this file.
pub fn load_features(path: &Path, standardize: bool, stats_from: Option<&Path>) -> Result<LoadedFeatures> {
    let raw = read_features(path)?;
    if !standardize {
        return Ok(LoadedFeatures {
            features: raw,
            standardization: None,
        });
    }
    let stats = match stats_from {
        Some(src) => Standardization::from_features(&read_features(src)?),
        None => Standardization::from_features(&raw),
    };
    for &k in &stats.constant_features {
        log::warn!("feature f{} has zero standard deviation; shifted but not scaled", k + 1);
    }
    Ok(LoadedFeatures {
        features: stats.apply(&raw)?,
        standardization: Some(stats),
    })
}

pub fn write_features(path: &Path, u: &FeatureMatrix) -> Result<()> {
    let mut w = writer(path)?;
    let header: Vec<String> = std::iter::once(FEATURES_ID_COLUMN.to_string())
        .chain((1..=u.d()).map(|k| format!("f{k}")))
        .collect();
    w.write_record(&header)?;
    for (id, col) in u.item_ids().iter().zip(u.columns()) {
        let row: Vec<String> = std::iter::once(id.clone())
            .chain(col.iter().map(|v| v.to_string()))
            .collect();
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Loads comparisons, dropping pairs observed fewer than `min_count` times.
pub fn load_comparisons(path: &Path, features: &FeatureMatrix, min_count: u64) -> Result<ComparisonDataset> {
    read_comparisons(path, min_count, |id| {
        features.index_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))
    })
}

/// Loads comparisons without a features file. Items are indexed in order of
/// first appearance; the returned ids map indices back to names.
pub fn load_comparisons_by_id(path: &Path, min_count: u64) -> Result<(Vec<String>, ComparisonDataset)> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let data = read_comparisons(path, min_count, |id| {
        Ok(*index.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            ids.len() - 1
        }))
    })?;
    Ok((ids, data))
}

fn read_comparisons(
    path: &Path,
    min_count: u64,
    mut resolve: impl FnMut(&str) -> Result<usize>,
) -> Result<ComparisonDataset> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &COMPARISONS_HEADER)?;
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, found {}", rec.len())));
        }
        if rec[0] == rec[1] {
            return Err(parse_err(path, line, format!("item `{}` compared with itself", &rec[0])));
        }
        let count: u64 = rec[2]
            .parse()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| parse_err(path, line, format!("count `{}` is not an integer >= 1", &rec[2])))?;
        let winner = resolve(&rec[0])?;
        let loser = resolve(&rec[1])?;
        let s = ComparisonSample::from_outcome(winner, loser)?;
        samples.extend(std::iter::repeat_n(s, count as usize));
    }
    if min_count > 1 {
        let totals: BTreeMap<(usize, usize), u64> = ComparisonDataset::from_samples(samples.clone())
            .pair_counts()
            .into_iter()
            .map(|(k, (a, b))| (k, a + b))
            .collect();
        samples.retain(|s| totals[&(s.i, s.j)] >= min_count);
    }
    Ok(ComparisonDataset::new(
        samples,
        Provenance::File {
            path: path.to_path_buf(),
        },
    ))
}

/// Writes counts aggregated per ordered outcome, pairs in canonical order.
pub fn write_comparisons(path: &Path, features: &FeatureMatrix, data: &ComparisonDataset) -> Result<()> {
    data.check_items(features.n())?;
    let ids = features.item_ids();
    let mut w = writer(path)?;
    w.write_record(COMPARISONS_HEADER)?;
    for ((i, j), (wins_i, wins_j)) in data.pair_counts() {
        if wins_i > 0 {
            w.write_record([ids[i].as_str(), ids[j].as_str(), &wins_i.to_string()])?;
        }
        if wins_j > 0 {
            w.write_record([ids[j].as_str(), ids[i].as_str(), &wins_j.to_string()])?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One ranker's ordering of a subset of items.
#[derive(Debug, Clone, PartialEq)]
pub struct RankerRanking {
    pub ranker_id: String,
    pub ranking: Ranking,
}

/// Loads rankings, keeping only items present in `features`.
///
/// Unknown items are dropped and the remaining ranks closed up; rankers left
/// with fewer than two items are dropped with a warning.
pub fn load_rankings(path: &Path, features: &FeatureMatrix) -> Result<Vec<RankerRanking>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &RANKINGS_HEADER)?;
    // Rankers in order of first appearance.
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, Vec<(u64, String)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, found {}", rec.len())));
        }
        let rank: u64 = rec[1]
            .parse()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| parse_err(path, line, format!("rank `{}` is not an integer >= 1", &rec[1])))?;
        let ranker = rec[0].to_string();
        let entry = rows.entry(ranker.clone()).or_default();
        if entry.is_empty() {
            order.push(ranker);
        }
        entry.push((rank, rec[2].to_string()));
    }

    let mut out = Vec::new();
    for ranker_id in order {
        let mut entries = rows.remove(&ranker_id).expect("ranker recorded");
        entries.sort();
        for (pos, (rank, _)) in entries.iter().enumerate() {
            let expected = pos as u64 + 1;
            if *rank != expected {
                let what = if *rank < expected { "tied" } else { "missing" };
                return Err(Error::Format(format!(
                    "ranker `{ranker_id}`: rank {} is {what}",
                    if *rank < expected { *rank } else { expected }
                )));
            }
        }
        let mut items = Vec::new();
        for (_, id) in &entries {
            match features.index_of(id) {
                Some(idx) => items.push(idx),
                None => log::warn!("ranker `{ranker_id}`: dropping unknown item `{id}`"),
            }
        }
        if items.len() < 2 {
            log::warn!("ranker `{ranker_id}`: fewer than 2 known items, dropped");
            continue;
        }
        let ranking = Ranking::from_order(items)
            .map_err(|_| Error::Format(format!("ranker `{ranker_id}` lists an item twice")))?;
        out.push(RankerRanking { ranker_id, ranking });
    }
    Ok(out)
}

pub fn write_rankings(path: &Path, features: &FeatureMatrix, rankings: &[RankerRanking]) -> Result<()> {
    let ids = features.item_ids();
    let mut w = writer(path)?;
    w.write_record(RANKINGS_HEADER)?;
    for r in rankings {
        for (pos, &item) in r.ranking.order().iter().enumerate() {
            let id = ids
                .get(item)
                .ok_or_else(|| Error::UnknownId(format!("item index {item}")))?;
            w.write_record([r.ranker_id.as_str(), &(pos + 1).to_string(), id.as_str()])?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads weights from a JSON array or an object with a `w_hat` or `w_star` field.
pub fn load_weights(path: &Path) -> Result<JudgmentVector> {
    let value: serde_json::Value = read_json(path)?;
    let field = match &value {
        serde_json::Value::Array(_) => &value,
        serde_json::Value::Object(map) => map
            .get("w_hat")
            .or_else(|| map.get("w_star"))
            .ok_or_else(|| Error::Format(format!("{}: no `w_hat` or `w_star` field", path.display())))?,
        _ => return Err(Error::Format(format!("{}: expected an array or object", path.display()))),
    };
    let w: Vec<f64> = serde_json::from_value(field.clone())?;
    JudgmentVector::new(w)
}

/// Adds `suffix` to the file name, keeping the directory.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}
