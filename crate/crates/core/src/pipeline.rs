//! End-to-end stages with durable outputs: repair (MET, rules, prompts,
//! completions, extraction) and evaluation.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ingest, Corpus, CorpusError, RepairSample};
use crate::met::NodeSpan;
use crate::llm::{ChatBackend, Gateway, HttpBackend, LlmError, MockAdapter, ModelConfig, PromptRequest, ResponseCache};
use crate::metrics::{evaluate, CodeBleuWeights, EvalReport, MetricsError, TruthRecord};
use crate::patch::{extract_patch, RepairCandidate};
use crate::prompt::{assemble_prompts, PromptBundle, PromptConfig};
use crate::rules::{run_rules, RuleConfig, RuleFinding};
use crate::syntax::Language;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("no usable samples in the corpus")]
    EmptyCorpus,
    #[error("missing ground truth: {0}")]
    MissingTruth(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl PipelineError {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::EmptyCorpus => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k: usize,
    pub edit_distance_threshold: usize,
    pub weights: CodeBleuWeights,
    /// Produce an empty report instead of failing when there are no candidates.
    pub allow_empty: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { k: 3, edit_distance_threshold: 5, weights: CodeBleuWeights::default(), allow_empty: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub jobs: usize,
    pub backend: BackendKind,
    /// JSON list of `{pattern, replies}` for the mock backend.
    pub mock_script: Option<PathBuf>,
    pub model: ModelConfig,
    pub rules: RuleConfig,
    pub prompt: PromptConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::from("corpus.jsonl"),
            output_dir: PathBuf::from("out"),
            cache_dir: None,
            jobs: 4,
            backend: BackendKind::Mock,
            mock_script: None,
            model: ModelConfig::default(),
            rules: RuleConfig::default(),
            prompt: PromptConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, PipelineError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.model.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let r = &self.rules;
        if !(r.similarity_threshold > 0.0 && r.similarity_threshold <= 1.0) {
            return Err(PipelineError::Config("rules.similarity_threshold must be in (0, 1]".into()));
        }
        if r.max_findings == 0 {
            return Err(PipelineError::Config("rules.max_findings must be at least 1".into()));
        }
        if self.eval.k == 0 || self.eval.k > self.model.k {
            return Err(PipelineError::Config(format!(
                "eval.k = {} must be between 1 and model.k = {}",
                self.eval.k, self.model.k
            )));
        }
        let w = self.eval.weights;
        if ((w.ngram + w.weighted_ngram + w.syntax + w.dataflow) - 1.0).abs() > 1e-9 {
            return Err(PipelineError::Config("eval.weights must sum to 1".into()));
        }
        if self.backend == BackendKind::Mock && self.mock_script.is_none() {
            return Err(PipelineError::Config("the mock backend needs mock_script".into()));
        }
        Ok(())
    }
}

/// A sample ready for completion.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    pub sample_id: String,
    pub language: Language,
    pub met_type: String,
    pub findings: Vec<RuleFinding>,
    pub bundles: Vec<PromptBundle>,
    /// Fixed-side MET text, when the sample has a fix.
    pub truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unsupported {
    pub sample_id: String,
    pub reason: String,
    pub detail: String,
}

impl Unsupported {
    fn new(sample_id: &str, reason: &str, detail: impl ToString) -> Self {
        Unsupported { sample_id: sample_id.to_string(), reason: reason.to_string(), detail: detail.to_string() }
    }
}

/// MET, rules and prompts for one sample.
pub fn prepare_sample(sample: &RepairSample, rules: &RuleConfig, prompt: &PromptConfig) -> Result<PreparedSample, Unsupported> {
    let analysis = sample.analyze().map_err(|e| Unsupported::new(&sample.id, e.reason(), &e))?;
    let findings = run_rules(&analysis.met, &analysis.v_tree, rules)
        .map_err(|e| Unsupported::new(&sample.id, "UnsupportedMetType", e))?;
    let bundles = assemble_prompts(&sample.id, &sample.cwe_id, &analysis.v_tree, &analysis.met, &findings, prompt)
        .map_err(|e| {
            let reason = match e {
                crate::prompt::PromptError::UnknownCwe(_) => "UnknownCwe",
                crate::prompt::PromptError::Rule(_) => "UnsupportedMetType",
            };
            Unsupported::new(&sample.id, reason, e)
        })?;
    Ok(PreparedSample {
        sample_id: sample.id.clone(),
        language: sample.language(),
        met_type: analysis.met.met_type().to_string(),
        truth: analysis.fixed_met_text().map(str::to_string),
        findings,
        bundles,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetReport {
    pub sample_id: String,
    pub met_type: String,
    pub v_span: NodeSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_span: Option<NodeSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merged_outline: Option<String>,
    pub v_text: String,
}

/// Where the MET of a sample is and what it looks like.
pub fn met_report(sample: &RepairSample) -> Result<MetReport, Unsupported> {
    let a = sample.analyze().map_err(|e| Unsupported::new(&sample.id, e.reason(), &e))?;
    let v = a.met.v_node(&a.v_tree);
    let f_span = a.f_tree.as_ref().and_then(|t| a.met.f_node(t)).map(NodeSpan::of);
    Ok(MetReport {
        sample_id: sample.id.clone(),
        met_type: a.met.met_type().to_string(),
        v_span: NodeSpan::of(v),
        f_span,
        merged_outline: a.met.merged.as_ref().map(|m| m.outline()),
        v_text: v.text().to_string(),
    })
}

/// Parse one sample given as a single JSON record, stripping comments.
pub fn load_sample(path: &Path) -> Result<RepairSample, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let line = serde_json::from_str::<serde_json::Value>(&text)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?
        .to_string();
    let corpus = ingest(line.as_bytes()).map_err(|source| PipelineError::Corpus { path: path.to_path_buf(), source })?;
    // a pair that differs only in comments is still a sample, just one without a MET
    corpus
        .samples
        .into_iter()
        .chain(corpus.dropped)
        .next()
        .ok_or_else(|| PipelineError::Config(format!("{}: no sample record", path.display())))
}

pub fn load_corpus(path: &Path) -> Result<Corpus, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    ingest(BufReader::new(file)).map_err(|source| PipelineError::Corpus { path: path.to_path_buf(), source })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| PipelineError::Io { path: path.to_path_buf(), source: e.into() })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| PipelineError::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptLine {
    pub sample_id: String,
    pub ordinal: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairSummary {
    pub samples: usize,
    pub supported: usize,
    pub unsupported: usize,
    pub prompts: usize,
    pub candidates: usize,
    pub backend_calls: usize,
}

/// Output file names inside the output directory.
pub mod files {
    pub const PROMPTS: &str = "prompts.jsonl";
    pub const CANDIDATES: &str = "candidates.jsonl";
    pub const UNSUPPORTED: &str = "unsupported.jsonl";
    pub const TRUTH: &str = "truth.jsonl";
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_CSV: &str = "report.csv";
}

/// Backend selected by the run configuration.
pub fn backend_for(cfg: &RunConfig) -> Result<Box<dyn ChatBackend>, PipelineError> {
    Ok(match cfg.backend {
        BackendKind::Mock => {
            let script = cfg.mock_script.as_ref().ok_or_else(|| PipelineError::Config("mock_script is not set".into()))?;
            Box::new(MockAdapter::from_file(script).map_err(|e| PipelineError::Config(e.to_string()))?)
        }
        BackendKind::Http => Box::new(HttpBackend::new(&cfg.model).map_err(|e| PipelineError::Config(e.to_string()))?),
    })
}

pub fn gateway_for<B: ChatBackend>(cfg: &RunConfig, backend: B) -> Result<Gateway<B>, PipelineError> {
    let cache = match &cfg.cache_dir {
        Some(dir) => Some(ResponseCache::open(dir).map_err(|e| PipelineError::Config(e.to_string()))?),
        None => None,
    };
    Gateway::new(backend, cfg.model.clone(), cache).map_err(|e| PipelineError::Config(e.to_string()))
}

/// Run every sample of the corpus through prompting, completion and extraction.
pub fn run_repair<B: ChatBackend>(cfg: &RunConfig, gateway: &Gateway<B>) -> Result<RepairSummary, PipelineError> {
    let corpus = load_corpus(&cfg.corpus)?;
    let outcomes: Vec<Result<PreparedSample, Unsupported>> =
        corpus.samples.par_iter().map(|s| prepare_sample(s, &cfg.rules, &cfg.prompt)).collect();
    let mut prepared = Vec::new();
    let mut unsupported = Vec::new();
    for o in outcomes {
        match o {
            Ok(p) => prepared.push(p),
            Err(u) => unsupported.push(u),
        }
    }
    if prepared.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;

    let requests: Vec<PromptRequest> = prepared
        .iter()
        .flat_map(|p| &p.bundles)
        .map(|b| PromptRequest { sample_id: b.sample_id.clone(), ordinal: b.ordinal, text: b.assembled.clone() })
        .collect();
    write_jsonl(
        &out.join(files::PROMPTS),
        requests.iter().map(|r| PromptLine { sample_id: r.sample_id.clone(), ordinal: r.ordinal, text: r.text.clone() }),
    )?;
    write_jsonl(
        &out.join(files::TRUTH),
        prepared.iter().filter_map(|p| {
            p.truth.as_ref().map(|code| TruthRecord {
                sample_id: p.sample_id.clone(),
                met_type: p.met_type.clone(),
                code: code.clone(),
                language: p.language,
            })
        }),
    )?;

    let results = gateway.complete_all(&requests, cfg.jobs);
    let mut candidates = Vec::new();
    let mut next = 0;
    for p in &prepared {
        let mine = &results[next..next + p.bundles.len()];
        next += p.bundles.len();
        if let Some(err) = mine.iter().find_map(|r| r.as_ref().err()) {
            if matches!(err, LlmError::AuthError(_) | LlmError::InvalidConfig(_)) {
                return Err(PipelineError::Llm(err.clone()));
            }
            unsupported.push(Unsupported::new(&p.sample_id, "CompletionFailed", err));
            continue;
        }
        for rec in mine.iter().flat_map(|r| r.as_ref().expect("checked above")) {
            let e = extract_patch(&rec.raw_text, &p.met_type, p.language).expect("prepared samples have supported types");
            candidates.push(RepairCandidate {
                sample_id: rec.sample_id.clone(),
                ordinal: rec.ordinal,
                attempt: rec.attempt,
                extraction_status: e.status,
                code: e.code,
            });
        }
    }
    let order: std::collections::HashMap<&str, usize> =
        corpus.samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    unsupported.sort_by_key(|u| order.get(u.sample_id.as_str()).copied());
    write_jsonl(&out.join(files::CANDIDATES), &candidates)?;
    write_jsonl(&out.join(files::UNSUPPORTED), &unsupported)?;
    Ok(RepairSummary {
        samples: corpus.samples.len(),
        supported: prepared.len(),
        unsupported: unsupported.len(),
        prompts: requests.len(),
        candidates: candidates.len(),
        backend_calls: gateway.backend_calls(),
    })
}

/// Score candidates against ground truth and write `report.json` and
/// `report.csv` into `out_dir`.
pub fn run_eval(candidates: &Path, truth: &Path, eval: &EvalConfig, out_dir: &Path) -> Result<EvalReport, PipelineError> {
    if !truth.exists() {
        return Err(PipelineError::MissingTruth(format!("{} does not exist", truth.display())));
    }
    let truth_records: Vec<TruthRecord> = read_jsonl(truth)?;
    let cands: Vec<RepairCandidate> = read_jsonl(candidates)?;
    let report = if cands.is_empty() {
        if !eval.allow_empty {
            return Err(PipelineError::MissingTruth(format!("{} has no candidates", candidates.display())));
        }
        evaluate(&[], &[], eval.k, eval.edit_distance_threshold, eval.weights)?
    } else {
        if truth_records.is_empty() {
            return Err(PipelineError::MissingTruth(format!("{} is empty", truth.display())));
        }
        evaluate(&truth_records, &cands, eval.k, eval.edit_distance_threshold, eval.weights).map_err(|e| match e {
            MetricsError::MissingTruth(id) => PipelineError::MissingTruth(format!("no truth record for sample `{id}`")),
            other => other.into(),
        })?
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let json_path = out_dir.join(files::REPORT_JSON);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&json_path, json + "\n").map_err(io_err(&json_path))?;
    let csv_path = out_dir.join(files::REPORT_CSV);
    fs::write(&csv_path, report.to_csv()).map_err(io_err(&csv_path))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let cfg = RunConfig::from_toml("mock_script = \"m.json\"\n").unwrap();
        assert_eq!(cfg.rules.max_findings, 3);
        assert_eq!(cfg.eval.k, 3);
        assert_eq!(cfg.eval.edit_distance_threshold, 5);
        assert_eq!(cfg.model.k, 3);
        assert!(matches!(RunConfig::from_toml("backend = \"mock\""), Err(PipelineError::Config(_))));
        assert!(matches!(
            RunConfig::from_toml("mock_script = \"m\"\n[eval]\nk = 5\n"),
            Err(PipelineError::Config(_))
        ));
        assert!(matches!(RunConfig::from_toml("jobs = \"many\""), Err(PipelineError::Config(_))));
        let http = RunConfig::from_toml("backend = \"http\"\n[model]\nmodel_name = \"gpt\"\ntemperature = 0.2\n").unwrap();
        assert_eq!(http.model.model_name, "gpt");
        assert_eq!(http.model.top_k, Some(50));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(PipelineError::EmptyCorpus.exit_code(), 2);
        assert_eq!(PipelineError::Config("x".into()).exit_code(), 1);
    }
}
