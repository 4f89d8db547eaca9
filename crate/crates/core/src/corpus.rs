//! Vulnerable/fixed function pairs: ingestion, preprocessing and MET statistics.

use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::met::{locate_met_online, met_for_pair, EditSpan, MetOutcome, MinimumEditTree, Side};
use crate::prompt::CweTable;
use crate::rules::MetType;
use crate::syntax::{parse, strip_comments, Language, SourceUnit, SyntaxTree};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub cwe_id: String,
    pub vuln_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_code: Option<String>,
    #[serde(default = "default_language")]
    pub language: Language,
    /// Edited line range of the vulnerable code, 1-based inclusive, for
    /// samples without a fix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vuln_lines: Option<(usize, usize)>,
}

fn default_language() -> Language {
    Language::C
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFlags {
    pub parse_degraded: bool,
    pub comment_identical: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSample {
    pub id: String,
    pub cwe_id: String,
    pub vuln_code: SourceUnit,
    pub fixed_code: Option<SourceUnit>,
    pub vuln_lines: Option<(usize, usize)>,
    pub met_cache: Option<MetOutcome>,
    pub flags: SampleFlags,
}

/// Why a sample has no usable MET.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetFailure {
    ParseFailure(String),
    NoEditInfo,
    LinesOutOfRange,
    Outcome(MetOutcome),
}

impl MetFailure {
    /// Short reason code.
    pub fn reason(&self) -> &'static str {
        match self {
            MetFailure::ParseFailure(_) => "ParseFailure",
            MetFailure::NoEditInfo => "NoEditInfo",
            MetFailure::LinesOutOfRange => "LinesOutOfRange",
            MetFailure::Outcome(MetOutcome::DifferentTypes { .. }) => "DifferentTypes",
            MetFailure::Outcome(MetOutcome::NoQualifyingNode { .. }) => "NoQualifyingNode",
            MetFailure::Outcome(MetOutcome::NoEdits) => "NoEdits",
            MetFailure::Outcome(MetOutcome::Found(_)) => "Found",
        }
    }
}

impl fmt::Display for MetFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetFailure::ParseFailure(e) => write!(f, "parse failure: {e}"),
            MetFailure::Outcome(MetOutcome::DifferentTypes { vulnerable, fixed }) => {
                write!(f, "minimum trees differ in kind: {vulnerable} vs {fixed}")
            }
            MetFailure::Outcome(MetOutcome::NoQualifyingNode { side }) => {
                write!(f, "no expression or statement contains the {side:?} edits")
            }
            MetFailure::Outcome(MetOutcome::NoEdits) => f.write_str("the two sides have no line differences"),
            MetFailure::NoEditInfo => f.write_str("no fixed code and no vuln_lines"),
            MetFailure::LinesOutOfRange => f.write_str("vuln_lines outside the code"),
            MetFailure::Outcome(MetOutcome::Found(_)) => f.write_str("MET found"),
        }
    }
}

/// A sample parsed and paired with its MET.
pub struct Analysis {
    pub v_tree: SyntaxTree,
    pub f_tree: Option<SyntaxTree>,
    pub met: MinimumEditTree,
}

impl Analysis {
    /// Fixed-side MET text when the sample has a fix.
    pub fn fixed_met_text(&self) -> Option<&str> {
        let f = self.f_tree.as_ref()?;
        self.met.f_node(f).map(|n| n.text())
    }
}

impl RepairSample {
    pub fn from_record(rec: SampleRecord) -> RepairSample {
        RepairSample {
            id: rec.id,
            cwe_id: rec.cwe_id,
            vuln_code: SourceUnit::new(rec.vuln_code, rec.language),
            fixed_code: rec.fixed_code.map(|f| SourceUnit::new(f, rec.language)),
            vuln_lines: rec.vuln_lines,
            met_cache: None,
            flags: SampleFlags::default(),
        }
    }

    pub fn to_record(&self) -> SampleRecord {
        SampleRecord {
            id: self.id.clone(),
            cwe_id: self.cwe_id.clone(),
            vuln_code: self.vuln_code.text.clone(),
            fixed_code: self.fixed_code.as_ref().map(|f| f.text.clone()),
            language: self.vuln_code.language,
            vuln_lines: self.vuln_lines,
        }
    }

    pub fn language(&self) -> Language {
        self.vuln_code.language
    }

    /// Parse both sides and locate the MET: by diff when a fix is present,
    /// otherwise from `vuln_lines`.
    pub fn analyze(&self) -> Result<Analysis, MetFailure> {
        let v_tree = parse(&self.vuln_code).map_err(|e| MetFailure::ParseFailure(e.to_string()))?;
        if let Some(fixed) = &self.fixed_code {
            let f_tree = parse(fixed).map_err(|e| MetFailure::ParseFailure(e.to_string()))?;
            return match met_for_pair(&v_tree, &f_tree) {
                MetOutcome::Found(met) => Ok(Analysis { v_tree, f_tree: Some(f_tree), met }),
                other => Err(MetFailure::Outcome(other)),
            };
        }
        let (start, end) = self.vuln_lines.ok_or(MetFailure::NoEditInfo)?;
        let span = EditSpan::from_lines(&self.vuln_code, Side::Vulnerable, start, end)
            .map_err(|_| MetFailure::LinesOutOfRange)?
            .ok_or(MetFailure::NoEditInfo)?;
        let node = locate_met_online(&v_tree, &span).map_err(|_| MetFailure::LinesOutOfRange)?;
        match node {
            Some(n) => {
                let met = MinimumEditTree::online(n);
                Ok(Analysis { v_tree, f_tree: None, met })
            }
            None => Err(MetFailure::Outcome(MetOutcome::NoQualifyingNode { side: Side::Vulnerable })),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub samples: Vec<RepairSample>,
    /// Pairs dropped because they were identical once comments were removed.
    pub dropped: Vec<RepairSample>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dropped_identical(&self) -> usize {
        self.dropped.len()
    }
}

fn well_formed_cwe(id: &str) -> bool {
    id.strip_prefix("CWE-").is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Read JSONL records, strip comments and drop pairs that become identical.
pub fn ingest<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::MalformedRecord { line: line_no, message };
        let rec: SampleRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if !well_formed_cwe(&rec.cwe_id) {
            return Err(malformed(format!("bad cwe_id `{}`", rec.cwe_id)));
        }
        if rec.vuln_code.trim().is_empty() {
            return Err(malformed("empty vuln_code".into()));
        }
        let mut sample = RepairSample::from_record(rec);
        match strip_comments(&sample.vuln_code) {
            Ok(u) => sample.vuln_code = u,
            Err(_) => sample.flags.parse_degraded = true,
        }
        if let Some(f) = &sample.fixed_code {
            if let Ok(u) = strip_comments(f) {
                sample.fixed_code = Some(u);
            }
        }
        if sample.fixed_code.as_ref().is_some_and(|f| f.text == sample.vuln_code.text) {
            sample.flags.comment_identical = true;
            corpus.dropped.push(sample);
        } else {
            corpus.samples.push(sample);
        }
    }
    Ok(corpus)
}

/// Write the retained samples back as JSONL.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for s in &corpus.samples {
        serde_json::to_writer(&mut out, &s.to_record())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Locate METs for every sample in parallel and record parse problems.
pub fn compute_mets(corpus: &mut Corpus) {
    corpus.samples.par_iter_mut().for_each(|s| {
        let degraded = parse(&s.vuln_code).map_or(true, |t| t.is_degraded());
        s.flags.parse_degraded |= degraded;
        s.met_cache = match s.analyze() {
            Ok(a) => Some(MetOutcome::Found(a.met)),
            Err(MetFailure::Outcome(o)) => Some(o),
            Err(_) => None,
        };
    });
}

pub fn filter_top25(corpus: Corpus, table: &CweTable) -> Corpus {
    Corpus {
        samples: corpus.samples.into_iter().filter(|s| table.contains(&s.cwe_id)).collect(),
        dropped: corpus.dropped,
    }
}

/// Where a sample lands in the MET statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsBucket {
    Modeled(MetType),
    Others,
    DifferentTypes,
    Degraded,
}

impl fmt::Display for StatsBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsBucket::Modeled(t) => write!(f, "{t}"),
            StatsBucket::Others => f.write_str("others"),
            StatsBucket::DifferentTypes => f.write_str("of different types"),
            StatsBucket::Degraded => f.write_str("parse degraded"),
        }
    }
}

pub fn bucket_of(sample: &RepairSample) -> StatsBucket {
    if sample.flags.parse_degraded {
        return StatsBucket::Degraded;
    }
    match &sample.met_cache {
        Some(MetOutcome::Found(m)) => MetType::from_kind(m.met_type()).map_or(StatsBucket::Others, StatsBucket::Modeled),
        Some(MetOutcome::DifferentTypes { .. }) => StatsBucket::DifferentTypes,
        _ => StatsBucket::Others,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub label: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetStats {
    pub rows: Vec<StatsRow>,
    pub total: usize,
    /// Share of samples whose MET is one of the six modeled types.
    pub modeled_coverage: f64,
    /// Share of samples whose two minimum trees have the same kind.
    pub same_type_share: f64,
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

impl MetStats {
    pub fn from_counts(modeled: [usize; 6], others: usize, different: usize, degraded: usize) -> MetStats {
        let total = modeled.iter().sum::<usize>() + others + different + degraded;
        let mut rows: Vec<StatsRow> = MetType::ALL
            .iter()
            .zip(modeled)
            .map(|(t, c)| StatsRow { label: t.kind().to_string(), count: c, percent: percent(c, total) })
            .collect();
        for (b, c) in [(StatsBucket::Others, others), (StatsBucket::DifferentTypes, different)] {
            rows.push(StatsRow { label: b.to_string(), count: c, percent: percent(c, total) });
        }
        if degraded > 0 {
            rows.push(StatsRow { label: StatsBucket::Degraded.to_string(), count: degraded, percent: percent(degraded, total) });
        }
        MetStats {
            rows,
            total,
            modeled_coverage: percent(modeled.iter().sum(), total),
            same_type_share: percent(total - different - degraded, total),
        }
    }

    pub fn count(&self, label: &str) -> usize {
        self.rows.iter().find(|r| r.label == label).map_or(0, |r| r.count)
    }

    pub fn percent_of(&self, label: &str) -> f64 {
        self.rows.iter().find(|r| r.label == label).map_or(0.0, |r| r.percent)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max("MET type".len());
        let mut out = format!("{:<width$}  {:>6}  {:>8}\n", "MET type", "count", "percent");
        for r in &self.rows {
            out.push_str(&format!("{:<width$}  {:>6}  {:>7.2}%\n", r.label, r.count, r.percent));
        }
        out.push_str(&format!("{:<width$}  {:>6}\n", "total", self.total));
        out.push_str(&format!("six-type coverage {:.2}%, same-type share {:.2}%\n", self.modeled_coverage, self.same_type_share));
        out
    }
}

/// MET-type statistics over samples whose METs have been computed.
pub fn met_type_stats(corpus: &Corpus) -> MetStats {
    let mut modeled = [0usize; 6];
    let (mut others, mut different, mut degraded) = (0, 0, 0);
    for s in &corpus.samples {
        match bucket_of(s) {
            StatsBucket::Modeled(t) => modeled[MetType::ALL.iter().position(|x| *x == t).expect("listed type")] += 1,
            StatsBucket::Others => others += 1,
            StatsBucket::DifferentTypes => different += 1,
            StatsBucket::Degraded => degraded += 1,
        }
    }
    MetStats::from_counts(modeled, others, different, degraded)
}
