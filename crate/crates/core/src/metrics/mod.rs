//! Candidate scoring: CodeBLEU, tree edit distance, perfect-patch equality
//! and pass@k aggregation.

mod bleu;
mod codebleu;
mod dataflow;
mod eval;
mod ted;

use thiserror::Error;

pub use bleu::{bleu, is_keyword, tokenize, weighted_bleu, MAX_ORDER};
pub use codebleu::{codebleu, syntax_match, CodeBleuScore, CodeBleuWeights};
pub use dataflow::{dataflow_edges, dataflow_match, DataflowEdge};
pub use eval::{
    edit_distance_rate, evaluate, normalize_code, pass_at_k, perfect_patch, EvalAggregates, EvalReport, EvalRow,
    TruthRecord, TypeBreakdown,
};
pub use ted::{label_tree, tree_edit_distance, tree_edit_distance_code, LabeledTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("reference has no tokens")]
    EmptyReference,
    #[error("tree edit distance needs non-empty trees")]
    EmptyTree,
    #[error("row {row} has {width} attempts, fewer than k = {k}")]
    ShapeMismatch { row: usize, width: usize, k: usize },
    #[error("no ground truth for sample `{0}`")]
    MissingTruth(String),
}
