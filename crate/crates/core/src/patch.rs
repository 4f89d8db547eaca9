//! Candidate patches from raw model output.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::rules::{MetType, RuleError};
use crate::syntax::{parse, Language, SourceUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtractionStatus {
    /// The reply parsed as code on its own.
    Exact,
    /// Code was found after removing fences or prose.
    FenceStripped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCandidate {
    pub sample_id: String,
    pub ordinal: usize,
    pub attempt: usize,
    #[serde(rename = "status")]
    pub extraction_status: ExtractionStatus,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub status: ExtractionStatus,
    pub code: String,
}

impl Extraction {
    fn failed() -> Self {
        Extraction { status: ExtractionStatus::Failed, code: String::new() }
    }
}

fn closed_fence() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[^\n`]*\n(.*?)```").expect("static regex"))
}

fn open_fence() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[^\n`]*\n(.*)$").expect("static regex"))
}

/// Texts to try after the direct parse, in order.
fn fallback_texts(raw: &str) -> Vec<String> {
    let mut out: Vec<String> = closed_fence().captures_iter(raw).map(|c| c[1].to_string()).collect();
    // an unterminated fence: everything after the last opening line
    let closed_end = closed_fence().find_iter(raw).last().map_or(0, |m| m.end());
    if let Some(c) = open_fence().captures(&raw[closed_end..]) {
        out.push(c[1].to_string());
    }
    let unfenced: String = raw
        .lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n");
    out.push(unfenced);
    out
}

/// True when `code` parses to a node of `kind` spanning all of it.
pub fn reparses_to(code: &str, kind: &str, language: Language) -> bool {
    let trimmed = code.trim();
    let Ok(tree) = parse(&SourceUnit::new(trimmed, language)) else { return false };
    !tree.is_degraded() && tree.nodes().any(|n| n.kind() == kind && n.text().trim() == trimmed)
}

/// First node of `kind` in document order whose text reparses on its own.
fn first_match(text: &str, kind: &str, language: Language, require_clean: bool) -> Option<String> {
    if text.trim().is_empty() {
        return None;
    }
    let tree = parse(&SourceUnit::new(text, language)).ok()?;
    if require_clean && tree.is_degraded() {
        return None;
    }
    let found = tree
        .nodes()
        .filter(|n| n.kind() == kind && !n.is_error())
        .map(|n| n.text().trim().to_string())
        .find(|code| reparses_to(code, kind, language));
    found
}

/// Extract the first subtree of the MET type from a model reply.
pub fn extract_patch(raw_text: &str, met_type: &str, language: Language) -> Result<Extraction, RuleError> {
    let kind = MetType::from_kind(met_type)?.kind();
    if let Some(code) = first_match(raw_text, kind, language, true) {
        return Ok(Extraction { status: ExtractionStatus::Exact, code });
    }
    for text in fallback_texts(raw_text) {
        if let Some(code) = first_match(&text, kind, language, false) {
            return Ok(Extraction { status: ExtractionStatus::FenceStripped, code });
        }
    }
    Ok(Extraction::failed())
}
