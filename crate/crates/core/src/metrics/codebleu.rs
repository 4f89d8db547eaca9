use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bleu::{bleu, tokenize, weighted_bleu};
use super::dataflow::{dataflow_edges, dataflow_match};
use super::MetricsError;
use crate::syntax::{parse, Language, Node, SourceUnit, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuWeights {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        CodeBleuWeights { ngram: 0.25, weighted_ngram: 0.25, syntax: 0.25, dataflow: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuScore {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
    pub total: f64,
    pub weights: CodeBleuWeights,
    /// The candidate did not parse; syntax and dataflow are 0.
    pub candidate_unparsed: bool,
}

/// S-expression over named nodes.
fn signature(n: Node<'_>, out: &mut String) {
    out.push('(');
    out.push_str(n.kind());
    for c in n.named_children() {
        out.push(' ');
        signature(c, out);
    }
    out.push(')');
}

fn subtree_signatures(tree: &SyntaxTree) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for n in tree.nodes().filter(|n| n.is_named() && n.id() != tree.root().id()) {
        let mut s = String::new();
        signature(n, &mut s);
        *counts.entry(s).or_insert(0) += 1;
    }
    counts
}

/// Fraction of the reference's named subtrees that also occur in the candidate.
pub fn syntax_match(candidate: &SyntaxTree, reference: &SyntaxTree) -> f64 {
    let r = subtree_signatures(reference);
    let total: usize = r.values().sum();
    if total == 0 {
        return 1.0;
    }
    let c = subtree_signatures(candidate);
    let matched: usize = r.iter().map(|(s, &n)| n.min(c.get(s).copied().unwrap_or(0))).sum();
    matched as f64 / total as f64
}

pub fn codebleu(
    candidate: &str,
    reference: &str,
    language: Language,
    weights: CodeBleuWeights,
) -> Result<CodeBleuScore, MetricsError> {
    let rt = tokenize(reference);
    if rt.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let ct = tokenize(candidate);
    let ngram = bleu(&ct, &rt);
    let weighted_ngram = weighted_bleu(&ct, &rt);
    let ref_tree = parse(&SourceUnit::new(reference, language)).map_err(|_| MetricsError::EmptyReference)?;
    let (syntax, dataflow, candidate_unparsed) = match parse(&SourceUnit::new(candidate, language)) {
        Ok(ct) => (
            syntax_match(&ct, &ref_tree),
            dataflow_match(&dataflow_edges(&ct), &dataflow_edges(&ref_tree)),
            false,
        ),
        Err(_) => (0.0, 0.0, true),
    };
    let total = weights.ngram * ngram
        + weights.weighted_ngram * weighted_ngram
        + weights.syntax * syntax
        + weights.dataflow * dataflow;
    Ok(CodeBleuScore { ngram, weighted_ngram, syntax, dataflow, total, weights, candidate_unparsed })
}
