mod common;

use std::fs;
use std::path::Path;

use common::{modeled_corpus, record, to_jsonl, Shape};
use spvr::corpus::SampleRecord;
use spvr::llm::{ChatBackend, Gateway, LlmError, MockAdapter, MockRule, ModelConfig, ResponseCache};
use spvr::patch::RepairCandidate;
use spvr::pipeline::{files, read_jsonl, run_eval, run_repair, EvalConfig, PipelineError, RunConfig, Unsupported};

fn config(dir: &Path, corpus: &str) -> RunConfig {
    fs::write(dir.join("corpus.jsonl"), corpus).unwrap();
    RunConfig {
        corpus: dir.join("corpus.jsonl"),
        output_dir: dir.join("out"),
        mock_script: Some(dir.join("script.json")),
        model: ModelConfig { backoff_ms: 1, ..ModelConfig::default() },
        ..RunConfig::default()
    }
}

#[test]
fn warm_cache_reproduces_candidates_without_backend_calls() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), &to_jsonl(modeled_corpus(6).into_iter().map(|(_, r)| r)));
    cfg.cache_dir = Some(dir.path().join("cache"));
    let mock = || MockAdapter::new(vec![MockRule::new(".*", ["a = b;", "```c\nif (x) y();\n```", "memcpy(a, b, 1);"])]).unwrap();
    let cache = || Some(ResponseCache::open(dir.path().join("cache")).unwrap());

    let cold = Gateway::new(mock(), cfg.model.clone(), cache()).unwrap();
    let first = run_repair(&cfg, &cold).unwrap();
    let cold_out = fs::read(dir.path().join("out").join(files::CANDIDATES)).unwrap();
    assert_eq!(first.backend_calls, first.prompts * 3);

    let warm = Gateway::new(mock(), cfg.model.clone(), cache()).unwrap();
    let second = run_repair(&cfg, &warm).unwrap();
    assert_eq!(second.backend_calls, 0);
    assert_eq!(fs::read(dir.path().join("out").join(files::CANDIDATES)).unwrap(), cold_out);
}

#[test]
fn unsupported_samples_are_recorded_with_reasons() {
    let dir = tempfile::tempdir().unwrap();
    let mut unknown_cwe = record(Shape::If, 2);
    unknown_cwe.cwe_id = "CWE-9999".into();
    let no_fix = SampleRecord { fixed_code: None, ..record(Shape::Call, 3) };
    let records = vec![record(Shape::If, 1), unknown_cwe, no_fix, record(Shape::Other, 4), record(Shape::Different, 5)];
    let cfg = config(dir.path(), &to_jsonl(records));
    let gw = Gateway::new(MockAdapter::fixed("if (x) y();"), cfg.model.clone(), None).unwrap();
    let summary = run_repair(&cfg, &gw).unwrap();
    assert_eq!((summary.samples, summary.supported), (5, 1));
    let unsupported: Vec<Unsupported> = read_jsonl(&cfg.output_dir.join(files::UNSUPPORTED)).unwrap();
    let reasons: Vec<(&str, &str)> =
        unsupported.iter().map(|u| (u.sample_id.as_str(), u.reason.as_str())).collect();
    assert_eq!(
        reasons,
        [
            ("syn-0002", "UnknownCwe"),
            ("syn-0003", "NoEditInfo"),
            ("syn-0004", "UnsupportedMetType"),
            ("syn-0005", "DifferentTypes"),
        ]
    );
}

#[test]
fn unmatched_prompts_mark_the_sample_and_auth_errors_abort() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &to_jsonl([record(Shape::If, 1), record(Shape::Call, 2)]));
    let gw = Gateway::new(MockAdapter::new(vec![MockRule::new("if_statement", ["x"])]).unwrap(), cfg.model.clone(), None).unwrap();
    run_repair(&cfg, &gw).unwrap();
    let unsupported: Vec<Unsupported> = read_jsonl(&cfg.output_dir.join(files::UNSUPPORTED)).unwrap();
    assert_eq!(unsupported.len(), 1);
    assert_eq!((unsupported[0].sample_id.as_str(), unsupported[0].reason.as_str()), ("syn-0002", "CompletionFailed"));

    struct Denied;
    impl ChatBackend for Denied {
        fn chat(&self, _: &str, _: usize, _: &ModelConfig) -> Result<String, LlmError> {
            Err(LlmError::AuthError("401 Unauthorized".into()))
        }
    }
    let gw = Gateway::new(Denied, cfg.model.clone(), None).unwrap();
    assert!(matches!(run_repair(&cfg, &gw), Err(PipelineError::Llm(LlmError::AuthError(_)))));
}

#[test]
fn eval_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = config(d, &to_jsonl([record(Shape::Assignment, 1)]));
    let gw = Gateway::new(MockAdapter::fixed("n_1 = len_1 - 1;"), cfg.model.clone(), None).unwrap();
    run_repair(&cfg, &gw).unwrap();
    let out = &cfg.output_dir;
    let report = run_eval(&out.join(files::CANDIDATES), &out.join(files::TRUTH), &EvalConfig::default(), out).unwrap();
    assert_eq!(report.aggregates.pass_at_k, 1);
    assert_eq!(report.rows[0].min_tree_edit_distance, 0);

    // a candidate for a sample without truth
    let stray = RepairCandidate {
        sample_id: "ghost".into(),
        ordinal: 1,
        attempt: 1,
        extraction_status: spvr::patch::ExtractionStatus::Exact,
        code: "x = 1".into(),
    };
    fs::write(d.join("stray.jsonl"), serde_json::to_string(&stray).unwrap() + "\n").unwrap();
    let err = run_eval(&d.join("stray.jsonl"), &out.join(files::TRUTH), &EvalConfig::default(), out).unwrap_err();
    assert!(matches!(err, PipelineError::MissingTruth(_)));

    fs::write(d.join("none.jsonl"), "").unwrap();
    assert!(matches!(
        run_eval(&d.join("none.jsonl"), &out.join(files::TRUTH), &EvalConfig::default(), out),
        Err(PipelineError::MissingTruth(_))
    ));
    let allow = EvalConfig { allow_empty: true, ..EvalConfig::default() };
    assert_eq!(run_eval(&d.join("none.jsonl"), &out.join(files::TRUTH), &allow, out).unwrap().aggregates.samples, 0);
}
