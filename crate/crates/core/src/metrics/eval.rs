use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebleu::{codebleu, CodeBleuWeights};
use super::ted::tree_edit_distance_code;
use super::MetricsError;
use crate::patch::{ExtractionStatus, RepairCandidate};
use crate::syntax::Language;

/// Whitespace-insensitive form: every whitespace run, line breaks included,
/// becomes one space.
pub fn normalize_code(code: &str) -> String {
    code.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn perfect_patch(candidate: &str, reference: &str) -> bool {
    normalize_code(candidate) == normalize_code(reference)
}

/// Samples with a success among their first `k` attempts, and that count
/// over the number of samples.
pub fn pass_at_k(matrix: &[Vec<bool>], k: usize) -> Result<(usize, f64), MetricsError> {
    for (row, attempts) in matrix.iter().enumerate() {
        if attempts.len() < k {
            return Err(MetricsError::ShapeMismatch { row, width: attempts.len(), k });
        }
    }
    let count = matrix.iter().filter(|row| row[..k].iter().any(|&b| b)).count();
    let rate = if matrix.is_empty() { 0.0 } else { count as f64 / matrix.len() as f64 };
    Ok((count, rate))
}

/// Fraction of distances strictly below `threshold`.
pub fn edit_distance_rate(distances: &[usize], threshold: usize) -> f64 {
    if distances.is_empty() {
        return 0.0;
    }
    distances.iter().filter(|&&d| d < threshold).count() as f64 / distances.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub sample_id: String,
    pub met_type: String,
    pub code: String,
    #[serde(default = "default_language")]
    pub language: Language,
}

fn default_language() -> Language {
    Language::C
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub sample_id: String,
    pub met_type: String,
    pub candidates: usize,
    pub extraction_failures: usize,
    pub best_codebleu: f64,
    pub min_tree_edit_distance: usize,
    pub perfect: bool,
    /// Per attempt 1..=k: some prompt's candidate was a perfect patch.
    pub attempt_success: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeBreakdown {
    pub met_type: String,
    pub samples: usize,
    pub mean_codebleu: f64,
    pub pass_at_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalAggregates {
    pub samples: usize,
    pub k: usize,
    pub pass_at_k: usize,
    pub pass_rate: f64,
    pub mean_codebleu: f64,
    pub edit_distance_threshold: usize,
    pub edit_distance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub aggregates: EvalAggregates,
    pub by_met_type: Vec<TypeBreakdown>,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["sample_id", "met_type", "best_codebleu", "min_tree_edit_distance", "perfect"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.sample_id.as_str(),
                r.met_type.as_str(),
                &format!("{:.6}", r.best_codebleu),
                &r.min_tree_edit_distance.to_string(),
                if r.perfect { "true" } else { "false" },
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

fn score_sample(truth: &TruthRecord, cands: &[&RepairCandidate], k: usize, weights: CodeBleuWeights) -> Result<EvalRow, MetricsError> {
    let mut attempt_success = vec![false; k];
    let mut best_codebleu: f64 = 0.0;
    let mut min_ted = tree_edit_distance_code("", &truth.code, truth.language)?;
    let mut failures = 0;
    for c in cands.iter().filter(|c| (1..=k).contains(&c.attempt)) {
        if c.extraction_status == ExtractionStatus::Failed {
            failures += 1;
            continue;
        }
        if perfect_patch(&c.code, &truth.code) {
            attempt_success[c.attempt - 1] = true;
        }
        best_codebleu = best_codebleu.max(codebleu(&c.code, &truth.code, truth.language, weights)?.total);
        min_ted = min_ted.min(tree_edit_distance_code(&c.code, &truth.code, truth.language)?);
    }
    Ok(EvalRow {
        sample_id: truth.sample_id.clone(),
        met_type: truth.met_type.clone(),
        candidates: cands.len(),
        extraction_failures: failures,
        best_codebleu,
        min_tree_edit_distance: min_ted,
        perfect: attempt_success.iter().any(|&b| b),
        attempt_success,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Score every truth sample against its candidates.
pub fn evaluate(
    truth: &[TruthRecord],
    candidates: &[RepairCandidate],
    k: usize,
    threshold: usize,
    weights: CodeBleuWeights,
) -> Result<EvalReport, MetricsError> {
    let index: HashMap<&str, usize> = truth.iter().enumerate().map(|(i, t)| (t.sample_id.as_str(), i)).collect();
    let mut grouped: Vec<Vec<&RepairCandidate>> = vec![Vec::new(); truth.len()];
    for c in candidates {
        let &i = index.get(c.sample_id.as_str()).ok_or_else(|| MetricsError::MissingTruth(c.sample_id.clone()))?;
        grouped[i].push(c);
    }
    let rows: Vec<EvalRow> = truth
        .par_iter()
        .zip(grouped.par_iter())
        .map(|(t, cs)| score_sample(t, cs, k, weights))
        .collect::<Result<_, _>>()?;

    let matrix: Vec<Vec<bool>> = rows.iter().map(|r| r.attempt_success.clone()).collect();
    let (pass, pass_rate) = pass_at_k(&matrix, k)?;
    let distances: Vec<usize> = rows.iter().map(|r| r.min_tree_edit_distance).collect();

    let mut by_type: BTreeMap<&str, Vec<&EvalRow>> = BTreeMap::new();
    for r in &rows {
        by_type.entry(r.met_type.as_str()).or_default().push(r);
    }
    let by_met_type = by_type
        .into_iter()
        .map(|(t, rs)| TypeBreakdown {
            met_type: t.to_string(),
            samples: rs.len(),
            mean_codebleu: mean(rs.iter().map(|r| r.best_codebleu)),
            pass_at_k: rs.iter().filter(|r| r.perfect).count(),
        })
        .collect();

    Ok(EvalReport {
        aggregates: EvalAggregates {
            samples: rows.len(),
            k,
            pass_at_k: pass,
            pass_rate,
            mean_codebleu: mean(rows.iter().map(|r| r.best_codebleu)),
            edit_distance_threshold: threshold,
            edit_distance_rate: edit_distance_rate(&distances, threshold),
        },
        by_met_type,
        rows,
    })
}
